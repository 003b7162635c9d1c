use std::path::PathBuf;
use std::process::Command;

use synthinst::analysis::{
    sample_pair_similarities, AnalysisError, ExternalScorer, PairSampling, SimilarityScorer, TokenOverlap,
};

fn python() -> Option<&'static str> {
    ["python3", "python"]
        .into_iter()
        .find(|p| Command::new(p).arg("--version").output().is_ok_and(|o| o.status.success()))
}

fn script() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../python/overlap_scorer.py")
        .display()
        .to_string()
}

#[test]
fn external_scorer_agrees_with_builtin() {
    let Some(py) = python() else {
        eprintln!("python not available; skipping");
        return;
    };
    let texts = [
        "the cat sat",
        "the cat\tsat on\nthe mat",
        "a back\\slash here",
        "",
        "the the the",
        "caf\u{e9} au lait",
    ];
    let external = ExternalScorer::new(py, vec![script()]);
    let sampling = PairSampling::Exhaustive;
    let ext = sample_pair_similarities(&texts, sampling, &external).unwrap();
    let builtin = sample_pair_similarities(&texts, sampling, &TokenOverlap).unwrap();
    assert_eq!(ext.pair_count, 15);
    for (a, b) in ext.scores.iter().zip(&builtin.scores) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    // symmetry through the protocol as well
    let pairs = [("x y", "y z"), ("y z", "x y")];
    let s = external.score_pairs(&pairs).unwrap();
    assert_eq!(s[0], s[1]);
}

#[test]
fn scorer_failures_are_errors() {
    let missing = ExternalScorer::new("/nonexistent/scorer", vec![]);
    assert!(matches!(
        missing.score_pairs(&[("a", "b")]),
        Err(AnalysisError::ExternalScorer(_))
    ));
    if let Ok(true) = Command::new("sh").arg("-c").arg("true").status().map(|s| s.success()) {
        let out_of_range = ExternalScorer::new("sh", vec!["-c".into(), "cat >/dev/null; echo 1.5".into()]);
        assert!(matches!(
            out_of_range.score_pairs(&[("a", "b")]),
            Err(AnalysisError::ExternalScorer(m)) if m.contains("outside")
        ));
        let short = ExternalScorer::new("sh", vec!["-c".into(), "cat >/dev/null; echo 0.5".into()]);
        assert!(short.score_pairs(&[("a", "b"), ("c", "d")]).is_err());
    }
}
