use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::parse::{Field, ParseError};
use super::StructuredCandidate;
use crate::prompting::SeedSet;
use crate::text::match_key;

/// Rejection samples kept per reason in a [`FilterReport`].
pub const MAX_SAMPLES_PER_REASON: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    MissingField,
    SeedCopy,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Kept,
    Rejected(Rejection),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionSample {
    pub reason: Rejection,
    /// Position of the candidate in the processed stream.
    pub position: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub missing_fields: usize,
    pub seed_copy: usize,
    pub duplicate: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub counts: FilterCounts,
    pub samples: Vec<RejectionSample>,
}

impl FilterReport {
    pub fn total(&self) -> usize {
        self.counts.missing_fields + self.counts.seed_copy + self.counts.duplicate + self.counts.kept
    }

    fn record(&mut self, verdict: Verdict, position: usize, detail: impl FnOnce() -> String) {
        let reason = match verdict {
            Verdict::Kept => {
                self.counts.kept += 1;
                return;
            }
            Verdict::Rejected(r) => r,
        };
        let n = match reason {
            Rejection::MissingField => &mut self.counts.missing_fields,
            Rejection::SeedCopy => &mut self.counts.seed_copy,
            Rejection::Duplicate => &mut self.counts.duplicate,
        };
        *n += 1;
        if self.samples.iter().filter(|s| s.reason == reason).count() < MAX_SAMPLES_PER_REASON {
            self.samples.push(RejectionSample {
                reason,
                position,
                detail: detail(),
            });
        }
    }
}

/// Instructions and inputs of the demonstrations shown to the model.
#[derive(Debug, Clone, Default)]
pub struct SeedIndex {
    instructions: HashSet<String>,
    inputs: HashSet<String>,
}

impl SeedIndex {
    pub fn new(seeds: &[SeedSet]) -> Self {
        let demos = seeds.iter().flat_map(|s| &s.demos);
        Self {
            instructions: demos.clone().map(|d| match_key(&d.instruction)).collect(),
            inputs: demos.map(|d| match_key(&d.input)).collect(),
        }
    }

    pub fn is_copy(&self, instruction: &str, input: &str) -> bool {
        self.instructions.contains(&match_key(instruction)) || self.inputs.contains(&match_key(input))
    }
}

/// The `(instruction, input)` pairs accepted so far in a run.
#[derive(Debug, Clone, Default)]
pub struct DedupIndex {
    pairs: HashSet<(String, String)>,
}

impl DedupIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, instruction: &str, input: &str) -> bool {
        self.pairs.contains(&(match_key(instruction), match_key(input)))
    }

    /// Returns false when the pair was already present.
    pub fn insert(&mut self, instruction: &str, input: &str) -> bool {
        self.pairs.insert((match_key(instruction), match_key(input)))
    }
}

/// Incremental form of the three filters, used by the generation loop.
#[derive(Debug, Clone)]
pub struct CandidateFilter {
    seeds: SeedIndex,
    dedup: DedupIndex,
    report: FilterReport,
}

impl CandidateFilter {
    pub fn new(seeds: &[SeedSet]) -> Self {
        Self::with_index(seeds, DedupIndex::new())
    }

    pub fn with_index(seeds: &[SeedSet], dedup: DedupIndex) -> Self {
        Self {
            seeds: SeedIndex::new(seeds),
            dedup,
            report: FilterReport::default(),
        }
    }

    pub fn admit(&mut self, candidate: Result<&StructuredCandidate, &ParseError>) -> Verdict {
        let position = self.report.total();
        let verdict = match candidate {
            Err(ParseError::MissingField(field)) => {
                let field: Field = *field;
                self.report.record(Verdict::Rejected(Rejection::MissingField), position, || {
                    field.to_string()
                });
                return Verdict::Rejected(Rejection::MissingField);
            }
            Ok(c) if self.seeds.is_copy(&c.instruction, &c.input) => Verdict::Rejected(Rejection::SeedCopy),
            Ok(c) if !self.dedup.insert(&c.instruction, &c.input) => Verdict::Rejected(Rejection::Duplicate),
            Ok(_) => Verdict::Kept,
        };
        let detail = candidate.map(|c| excerpt(&c.instruction)).unwrap_or_default();
        self.report.record(verdict, position, || detail);
        verdict
    }

    pub fn report(&self) -> &FilterReport {
        &self.report
    }

    pub fn into_parts(self) -> (DedupIndex, FilterReport) {
        (self.dedup, self.report)
    }
}

fn excerpt(s: &str) -> String {
    const MAX: usize = 80;
    match s.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// Applies the missing-field, seed-copy and duplicate filters to a parsed
/// candidate stream. `existing` carries accepted pairs from earlier batches
/// and is updated in place.
pub fn filter_candidates(
    candidates: Vec<Result<StructuredCandidate, ParseError>>,
    seeds: &[SeedSet],
    existing: &mut DedupIndex,
) -> (Vec<StructuredCandidate>, FilterReport) {
    let mut filter = CandidateFilter::with_index(seeds, std::mem::take(existing));
    let mut kept = Vec::new();
    for c in candidates {
        if filter.admit(c.as_ref()) == Verdict::Kept {
            kept.push(c.expect("kept candidates parsed"));
        }
    }
    let (dedup, report) = filter.into_parts();
    *existing = dedup;
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::builtin_seed_sets;
    use crate::structgen::Provenance;

    fn cand(instruction: &str, input: &str, constraints: &str) -> Result<StructuredCandidate, ParseError> {
        Ok(StructuredCandidate {
            instruction: instruction.into(),
            input: input.into(),
            constraints: constraints.into(),
            provenance: Provenance::default(),
        })
    }

    #[test]
    fn seed_demo_copy_is_rejected() {
        let seeds = builtin_seed_sets().unwrap();
        let d = &seeds[0].demos[1];
        let (kept, report) = filter_candidates(
            vec![cand(&d.instruction, &d.input, &d.constraints)],
            &seeds,
            &mut DedupIndex::new(),
        );
        assert!(kept.is_empty());
        assert_eq!(report.counts.seed_copy, 1);
    }

    #[test]
    fn copied_input_alone_is_a_seed_copy() {
        let seeds = builtin_seed_sets().unwrap();
        let input = format!("  {}  ", seeds[2].demos[0].input);
        let (_, report) = filter_candidates(vec![cand("Brand new task.", &input, "None.")], &seeds, &mut DedupIndex::new());
        assert_eq!(report.counts.seed_copy, 1);
    }

    #[test]
    fn duplicate_pair_with_other_constraints() {
        let seeds = builtin_seed_sets().unwrap();
        let (kept, report) = filter_candidates(
            vec![cand("I", "x", "None."), cand("I", "x", "Answer yes or no.")],
            &seeds,
            &mut DedupIndex::new(),
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].constraints, "None.");
        assert_eq!(report.counts.duplicate, 1);
    }

    #[test]
    fn distinct_candidates_all_kept() {
        let seeds = builtin_seed_sets().unwrap();
        let (kept, report) = filter_candidates(
            vec![cand("a", "1", "None."), cand("b", "2", "None."), cand("a", "3", "None.")],
            &seeds,
            &mut DedupIndex::new(),
        );
        assert_eq!(kept.len(), 3);
        assert_eq!(report.counts.kept, 3);
        assert_eq!(report.total(), 3);
    }

    #[test]
    fn missing_field_tallies_and_index_persists() {
        let seeds = builtin_seed_sets().unwrap();
        let mut index = DedupIndex::new();
        let (_, first) = filter_candidates(
            vec![Err(ParseError::MissingField(Field::Input)), cand("a", "1", "None.")],
            &seeds,
            &mut index,
        );
        assert_eq!(first.counts.missing_fields, 1);
        assert_eq!(first.samples[0].detail, "Input");
        let (kept, second) = filter_candidates(vec![cand("a ", "1", "None.")], &seeds, &mut index);
        assert!(kept.is_empty());
        assert_eq!(second.counts.duplicate, 1);
    }

    #[test]
    fn samples_are_capped() {
        let mut report = FilterReport::default();
        for i in 0..100 {
            report.record(Verdict::Rejected(Rejection::Duplicate), i, String::new);
        }
        assert_eq!(report.counts.duplicate, 100);
        assert_eq!(report.samples.len(), MAX_SAMPLES_PER_REASON);
    }
}
