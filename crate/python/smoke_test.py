"""Smoke test for the Python extension.

Build first with `cargo build -p synthinst-py`, then run
`python3 python/smoke_test.py [path/to/libsynthinst_py.so]`.
"""

import importlib.util
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE = ROOT / "crates/core/fixtures/demo.jsonl"
GOLDEN = ROOT / "crates/core/tests/golden"


def load(lib):
    # the import name must match the module init symbol, so copy to synthinst.so
    tmp = pathlib.Path(tempfile.mkdtemp())
    target = tmp / "synthinst.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("synthinst", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    lib = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "target/debug/libsynthinst_py.so"
    si = load(lib)

    seeds = si.builtin_seed_sets()
    assert [s.id for s in seeds] == [1, 2, 3, 4, 5]
    prompt = si.render_generation_prompt(seeds[0])
    assert prompt.endswith("Example 4\n")
    minimal = si.render_generation_prompt(seeds[0], style="minimal", include_constraints=False)
    assert "Constraints:" not in minimal

    demo = si.Demonstration("Add the numbers.", "2, 3", "none", "5")
    assert demo.constraints == "None."
    block = "Instruction: Add the numbers.\nInput: 2, 3\nConstraints: None.\nOutput: 5\n"
    assert si.parse_completion(block, expect_output=True)["output"] == "5"

    assert si.validate_paraphrase(" Sum {INPUT}.", "Add the numbers.") == "Sum {INPUT}."
    for bad, why in [("Add the numbers.", "copy_of_original"), ("Sum them.", "no_placeholder")]:
        try:
            si.validate_paraphrase(bad, "Add the numbers.")
        except ValueError as e:
            assert str(e) == why, e
        else:
            raise AssertionError(bad)
    assert si.instantiate("Sum {INPUT}.", "2, 3") == "Sum 2, 3."
    assert si.expanded_record_count([(2, 2), (1, 0)]) == 7

    assert si.token_overlap_score("a b c", "a b c") == 1.0
    dist = si.similarity_distribution(["a b", "a c", "d e"], exhaustive=True)
    assert dist["pair_count"] == 3

    cost = si.estimate_cost(64000)
    assert cost["generated_cost"] == 1280.0 and cost["human_equivalent_cost"] == 32000.0

    with tempfile.TemporaryDirectory() as out:
        config = si.Config()
        config.fixture = str(FIXTURE)
        config.target = 4
        config.output_dir = out
        gen = si.generate(config)
        assert not gen["partial"] and gen["report"]["produced"] == 4
        exp = si.expand(config)
        core = pathlib.Path(gen["core"]).read_bytes()
        full = pathlib.Path(exp["full"]).read_bytes()
        assert core == (GOLDEN / "core.jsonl").read_bytes()
        assert full == (GOLDEN / "full.jsonl").read_bytes()
        n = si.export(exp["full"], str(pathlib.Path(out) / "train.jsonl"))
        assert n == 10
        stats = si.analyze(exp["full"], config, exhaustive=True)
        assert stats["stats"]["records"] == 10

        config.fixture = str(pathlib.Path(out) / "missing.jsonl")
        try:
            si.generate(config)
        except si.SynthinstError as e:
            assert json.loads(str(e))["exit_code"] == 2
        else:
            raise AssertionError("missing fixture accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
