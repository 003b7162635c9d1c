use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const HISTOGRAM_BINS: usize = 50;
pub const DEFAULT_PAIRS: usize = 10_000;

/// Scores text pairs in `[0, 1]`. Implementations must be symmetric.
pub trait SimilarityScorer: Sync {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, AnalysisError>;
}

/// F1 overlap of whitespace-token multisets.
pub fn token_overlap_score(a: &str, b: &str) -> f64 {
    let mut counts: HashMap<&str, i64> = HashMap::new();
    let mut len_a = 0usize;
    for t in a.split_whitespace() {
        *counts.entry(t).or_default() += 1;
        len_a += 1;
    }
    let mut common = 0usize;
    let mut len_b = 0usize;
    for t in b.split_whitespace() {
        len_b += 1;
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    match (len_a, len_b) {
        (0, 0) => 1.0,
        _ if common == 0 => 0.0,
        // F1 with precision common/len_a and recall common/len_b
        _ => 2.0 * common as f64 / (len_a + len_b) as f64,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TokenOverlap;

impl SimilarityScorer for TokenOverlap {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, AnalysisError> {
        Ok(pairs.par_iter().map(|(a, b)| token_overlap_score(a, b)).collect())
    }
}

/// Delegates scoring to a child process: one tab-separated pair per line on
/// stdin, one decimal score per line on stdout. Backslash, tab, CR and LF
/// inside texts are escaped as `\\`, `\t`, `\r` and `\n`.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ExternalScorer {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }
}

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

impl SimilarityScorer for ExternalScorer {
    fn score_pairs(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, AnalysisError> {
        let ext = |e: std::io::Error| AnalysisError::ExternalScorer(format!("{}: {e}", self.program.display()));
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(ext)?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload: String = pairs
            .iter()
            .map(|(a, b)| format!("{}\t{}\n", escape_field(a), escape_field(b)))
            .collect();
        let writer = std::thread::spawn(move || {
            let r = stdin.write_all(payload.as_bytes());
            drop(stdin);
            r
        });
        let stdout = child.stdout.take().expect("piped stdout");
        let mut scores = Vec::with_capacity(pairs.len());
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line.map_err(ext)?;
            let score: f64 = line
                .trim()
                .parse()
                .map_err(|_| AnalysisError::ExternalScorer(format!("line {}: not a number: {line:?}", i + 1)))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(AnalysisError::ExternalScorer(format!("line {}: score {score} outside [0, 1]", i + 1)));
            }
            scores.push(score);
        }
        writer
            .join()
            .expect("writer thread panicked")
            .map_err(ext)?;
        let status = child.wait().map_err(ext)?;
        if !status.success() {
            return Err(AnalysisError::ExternalScorer(format!("scorer exited with {status}")));
        }
        if scores.len() != pairs.len() {
            return Err(AnalysisError::ExternalScorer(format!(
                "expected {} scores, got {}",
                pairs.len(),
                scores.len()
            )));
        }
        Ok(scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PairSampling {
    /// `n_pairs` draws of two distinct records, with replacement across draws.
    Random { n_pairs: usize, seed: u64 },
    /// Every unordered pair exactly once.
    Exhaustive,
}

/// Record index pairs selected by `sampling` over `n` records.
pub fn sample_pairs(n: usize, sampling: PairSampling) -> Result<Vec<(usize, usize)>, AnalysisError> {
    if n < 2 {
        return Err(AnalysisError::DatasetTooSmall(n));
    }
    Ok(match sampling {
        PairSampling::Random { n_pairs, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_pairs)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let mut j = rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    (i, j)
                })
                .collect()
        }
        PairSampling::Exhaustive => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDistribution {
    pub pair_count: usize,
    pub scores: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    pub summary: Summary,
}

impl SimilarityDistribution {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut histogram: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
            .map(|b| HistogramBin {
                bin_left: b as f64 / HISTOGRAM_BINS as f64,
                bin_right: (b + 1) as f64 / HISTOGRAM_BINS as f64,
                count: 0,
            })
            .collect();
        for &s in &scores {
            let b = ((s * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            histogram[b].count += 1;
        }
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let summary = Summary {
            mean: if scores.is_empty() {
                0.0
            } else {
                scores.iter().sum::<f64>() / scores.len() as f64
            },
            median: quantile(&sorted, 0.5),
            p10: quantile(&sorted, 0.1),
            p90: quantile(&sorted, 0.9),
        };
        Self {
            pair_count: scores.len(),
            scores,
            histogram,
            summary,
        }
    }

    /// `bin_left,bin_right,count` rows with a header line.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for b in &self.histogram {
            out.push_str(&format!("{},{},{}\n", b.bin_left, b.bin_right, b.count));
        }
        out
    }
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Scores the selected pairs of `texts` and summarizes the distribution.
/// Scores keep sampling order.
pub fn sample_pair_similarities<S: AsRef<str> + Sync>(
    texts: &[S],
    sampling: PairSampling,
    scorer: &dyn SimilarityScorer,
) -> Result<SimilarityDistribution, AnalysisError> {
    let pairs = sample_pairs(texts.len(), sampling)?;
    let borrowed: Vec<(&str, &str)> = pairs
        .iter()
        .map(|&(i, j)| (texts[i].as_ref(), texts[j].as_ref()))
        .collect();
    let scores = scorer.score_pairs(&borrowed)?;
    if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(AnalysisError::ScoreOutOfRange(*bad));
    }
    Ok(SimilarityDistribution::from_scores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_examples() {
        assert_eq!(token_overlap_score("a b c", "a b c"), 1.0);
        assert_eq!(token_overlap_score("a b", "c d"), 0.0);
        assert_eq!(token_overlap_score("a b c d", "c d e f"), 0.5);
        assert_eq!(token_overlap_score("", ""), 1.0);
        assert_eq!(token_overlap_score("a", ""), 0.0);
        // multiset: one shared "a" out of 3 + 1 tokens
        assert_eq!(token_overlap_score("a a b", "a"), 0.5);
    }

    #[test]
    fn degenerate_datasets() {
        let same = vec!["x y"; 6];
        let d = sample_pair_similarities(&same, PairSampling::Random { n_pairs: 100, seed: 1 }, &TokenOverlap).unwrap();
        assert!(d.scores.iter().all(|&s| s == 1.0));
        assert_eq!(d.histogram[HISTOGRAM_BINS - 1].count, 100);

        let disjoint: Vec<String> = (0..6).map(|i| format!("t{i} u{i}")).collect();
        let d = sample_pair_similarities(&disjoint, PairSampling::Random { n_pairs: 100, seed: 1 }, &TokenOverlap).unwrap();
        assert!(d.scores.iter().all(|&s| s == 0.0));
        assert_eq!(d.histogram.iter().map(|b| b.count).sum::<usize>(), 100);
    }

    #[test]
    fn sampled_pairs_are_distinct_and_reproducible() {
        let s = PairSampling::Random { n_pairs: 500, seed: 9 };
        let a = sample_pairs(7, s).unwrap();
        assert!(a.iter().all(|(i, j)| i != j && *i < 7 && *j < 7));
        assert_eq!(a, sample_pairs(7, s).unwrap());
        assert_ne!(a, sample_pairs(7, PairSampling::Random { n_pairs: 500, seed: 10 }).unwrap());
        assert_eq!(sample_pairs(5, PairSampling::Exhaustive).unwrap().len(), 10);
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            sample_pair_similarities(&["only"], PairSampling::Exhaustive, &TokenOverlap),
            Err(AnalysisError::DatasetTooSmall(1))
        ));
    }

    #[test]
    fn quantiles_interpolate() {
        let d = SimilarityDistribution::from_scores(vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(d.summary.median, 0.375);
        assert!((d.summary.p10 - 0.075).abs() < 1e-12);
        assert_eq!(d.summary.mean, 0.4375);
        let csv = d.histogram_csv();
        assert!(csv.starts_with("bin_left,bin_right,count\n0,0.02,1\n"));
        assert_eq!(csv.lines().count(), HISTOGRAM_BINS + 1);
    }

    #[test]
    fn escaping() {
        assert_eq!(escape_field("a\tb\nc\\d"), "a\\tb\\nc\\\\d");
    }
}
