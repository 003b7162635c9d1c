mod support;

use proptest::prelude::*;

use support::*;
use synthinst::analysis::{
    estimate_cost, sample_pair_similarities, token_overlap_score, CostModel, PairSampling, SimilarityScorer,
    TokenOverlap,
};
use synthinst::expansion::{expand_dataset, expanded_record_count, FormulationKind};
use synthinst::prompting::{builtin_seed_sets, MetaPrompts};
use synthinst::structgen::{filter_candidates, parse_structured_completion, DedupIndex};
use synthinst::PromptStyle;

proptest! {
    #[test]
    fn parse_inverts_render(demo in demonstration(), k in 1usize..9) {
        for style in PromptStyle::ALL {
            let block = MetaPrompts::builtin().get(style).render_demo(k, &demo, demo.output.is_some());
            let parsed = parse_structured_completion(&block, demo.output.is_some()).unwrap();
            prop_assert_eq!(&parsed.instruction, &demo.instruction);
            prop_assert_eq!(&parsed.input, &demo.input);
            prop_assert_eq!(&parsed.constraints, &demo.constraints);
            prop_assert_eq!(&parsed.output, &demo.output);
        }
    }

    #[test]
    fn filter_matches_reference(stream in candidate_stream(&builtin_seed_sets().unwrap(), 0..300)) {
        let seeds = builtin_seed_sets().unwrap();
        let (kept, report) = filter_candidates(stream.clone(), &seeds, &mut DedupIndex::new());
        let (ref_kept, ref_counts) = reference_filter(&stream, &seeds);
        prop_assert_eq!(&kept, &ref_kept);
        let c = report.counts;
        prop_assert_eq!(
            (c.missing_fields, c.seed_copy, c.duplicate, c.kept),
            (ref_counts.missing_fields, ref_counts.seed_copy, ref_counts.duplicate, ref_counts.kept)
        );
        prop_assert_eq!(c.missing_fields + c.seed_copy + c.duplicate + c.kept, stream.len());
    }

    #[test]
    fn filter_is_idempotent(stream in candidate_stream(&builtin_seed_sets().unwrap(), 0..300)) {
        let seeds = builtin_seed_sets().unwrap();
        let (kept, _) = filter_candidates(stream, &seeds, &mut DedupIndex::new());
        let again: Vec<_> = kept.iter().cloned().map(Ok).collect();
        let (kept2, report2) = filter_candidates(again, &seeds, &mut DedupIndex::new());
        prop_assert_eq!(&kept2, &kept);
        let c = report2.counts;
        prop_assert_eq!((c.missing_fields, c.seed_copy, c.duplicate), (0, 0, 0));
    }

    #[test]
    fn kept_count_is_order_independent(
        stream in candidate_stream(&builtin_seed_sets().unwrap(), 0..200),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let seeds = builtin_seed_sets().unwrap();
        let mut shuffled = stream.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let (a, _) = filter_candidates(stream, &seeds, &mut DedupIndex::new());
        let (b, _) = filter_candidates(shuffled, &seeds, &mut DedupIndex::new());
        prop_assert_eq!(a.len(), b.len());
    }

    #[test]
    fn expansion_count_formula(groups in prop::collection::vec((1usize..=10, 0usize..=2), 0..=100)) {
        let (core, templates) = grouped_dataset(&groups);
        let records = expand_dataset(&core, &templates);
        let by_hand: usize = groups.iter().map(|(n, t)| (1 + t) * n).sum();
        prop_assert_eq!(records.len(), by_hand);
        prop_assert_eq!(
            expanded_record_count(groups.iter().map(|&(n, t)| (n as u64, t as u64))),
            by_hand as u64
        );
        for r in &records {
            let src = core.iter().find(|e| e.id == r.core_example_id).unwrap();
            prop_assert_eq!(&r.output, &src.output);
            if r.formulation_kind == FormulationKind::Paraphrase {
                prop_assert!(r.rendered_task.ends_with(&src.candidate.input));
            }
        }
    }

    #[test]
    fn overlap_scorer_contract((a, b) in text_pair()) {
        let s = token_overlap_score(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, token_overlap_score(&b, &a));
        prop_assert_eq!(token_overlap_score(&a, &a), 1.0);
        prop_assert!((s - reference_overlap(&a, &b)).abs() < 1e-12);
        let batch = TokenOverlap.score_pairs(&[(a.as_str(), b.as_str()), (b.as_str(), a.as_str())]).unwrap();
        prop_assert_eq!(batch, vec![s, s]);
    }

    #[test]
    fn sampling_is_reproducible(n in 2usize..40, pairs in 0usize..300, seed in any::<u64>()) {
        let texts: Vec<String> = (0..n).map(|i| format!("w{} w{} shared", i % 7, i % 3)).collect();
        let s = PairSampling::Random { n_pairs: pairs, seed };
        let a = sample_pair_similarities(&texts, s, &TokenOverlap).unwrap();
        let b = sample_pair_similarities(&texts, s, &TokenOverlap).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(a.histogram.iter().map(|h| h.count).sum::<usize>(), pairs);
    }

    #[test]
    fn cost_is_linear_and_monotone(c in 0u64..1_000_000, e in 0u64..1_000_000, dc in 0u64..1000, de in 0u64..1000) {
        let m = CostModel::default();
        let base = estimate_cost(c, e, &m);
        let sum = estimate_cost(c + dc, e + de, &m);
        let delta = estimate_cost(dc, de, &m);
        prop_assert_eq!(sum.generated_cost.0, base.generated_cost.0 + delta.generated_cost.0);
        prop_assert_eq!(sum.human_equivalent_cost.0, base.human_equivalent_cost.0 + delta.human_equivalent_cost.0);
        prop_assert!(sum.generated_cost >= base.generated_cost);
    }
}
