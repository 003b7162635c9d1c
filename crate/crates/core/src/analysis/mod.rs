//! Dataset measurement: pairwise similarity, descriptive statistics and
//! generation cost.

mod cost;
mod similarity;
mod stats;

pub use cost::{estimate_cost, CostModel, CostReport, Usd};
pub use similarity::{
    escape_field, sample_pair_similarities, sample_pairs, token_overlap_score, ExternalScorer, HistogramBin,
    PairSampling, SimilarityDistribution, SimilarityScorer, Summary, TokenOverlap, DEFAULT_PAIRS, HISTOGRAM_BINS,
};
pub use stats::{
    dataset_stats, parse_dataset, ConstraintStats, DatasetRow, DatasetStats, GroupStats, LengthHistogram,
    LengthStats, MalformedRecord, ParaphraseStats, ParsedDataset, LENGTH_BUCKET_WORDS,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("dataset has {0} records; at least 2 are needed to sample pairs")]
    DatasetTooSmall(usize),
    #[error("similarity score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("external scorer: {0}")]
    ExternalScorer(String),
}
