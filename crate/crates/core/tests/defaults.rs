mod support;

use synthinst::backend::DecodingMode;
use synthinst::config::AttemptAccounting;
use synthinst::{PromptStyle, RunConfig};

#[test]
fn default_config_snapshot() {
    let json = serde_json::to_string_pretty(&RunConfig::default()).unwrap() + "\n";
    support::check_snapshot("default_config.json", &json).unwrap();
}

#[test]
fn defaults_are_the_main_configuration() {
    let c = RunConfig::default();
    assert_eq!(c.style, PromptStyle::Enumeration);
    assert_eq!(c.seed_set_ids, vec![1, 2, 3, 4, 5]);
    assert_eq!(c.decoding.input.mode, DecodingMode::Nucleus);
    assert_eq!(c.decoding.input.top_p, 0.99);
    assert_eq!(c.decoding.input.max_tokens, 512);
    assert_eq!(c.decoding.output.mode, DecodingMode::Greedy);
    assert_eq!(c.decoding.output.max_tokens, 256);
    assert_eq!(c.decoding.rephrase.max_tokens, 256);
    assert!(c.constraints_in_input_gen && c.constraints_in_output_gen);
    assert!(!c.one_step);
    assert_eq!((c.expansion.want, c.expansion.max_attempts), (2, 5));
    assert_eq!(c.expansion.accounting, AttemptAccounting::Total);
    assert_eq!(c.similarity_pairs, 10_000);
    assert_eq!(c.backend.requests_per_minute, 60);
    assert!(c.paths.fixture.is_none());
}

#[test]
fn empty_config_file_is_the_default() {
    assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
}
