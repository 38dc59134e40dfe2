mod common;

use std::collections::HashMap;

use latent_sv::eval::{
    effort_at_recall, mfr, prf, recall_at_loc, top10_accuracy, wilcoxon_signed_rank,
    PredictionRecord, ScoredFunction,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scored() -> impl Strategy<Value = Vec<ScoredFunction>> {
    any::<u64>()
        .prop_map(|seed| common::random_scored(&mut ChaCha8Rng::seed_from_u64(seed), 12, 30))
}

fn preds_and_labels() -> impl Strategy<Value = (Vec<PredictionRecord>, HashMap<String, bool>)> {
    prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..60).prop_map(|rows| {
        let preds = rows
            .iter()
            .enumerate()
            .map(|(i, (p, _))| PredictionRecord {
                id: format!("id{i}"),
                p_vulnerable: (p * 8.0).round() / 8.0,
                line_scores: None,
                hard_label: None,
            })
            .collect();
        let labels = rows
            .iter()
            .enumerate()
            .map(|(i, (_, l))| (format!("id{i}"), *l))
            .collect();
        (preds, labels)
    })
}

proptest! {
    #[test]
    fn f1_between_precision_and_recall((preds, labels) in preds_and_labels()) {
        let m = prf(&preds, &labels, 0.5).unwrap();
        let (lo, hi) = (m.precision.min(m.recall), m.precision.max(m.recall));
        prop_assert!(m.f1 >= lo - 1e-12 && m.f1 <= hi + 1e-12);
    }

    #[test]
    fn prf_order_invariant((mut preds, labels) in preds_and_labels(), seed in any::<u64>()) {
        let a = prf(&preds, &labels, 0.5).unwrap();
        use rand::seq::SliceRandom;
        preds.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, prf(&preds, &labels, 0.5).unwrap());
    }

    #[test]
    fn prf_matches_oracle((preds, labels) in preds_and_labels()) {
        let m = prf(&preds, &labels, 0.5).unwrap();
        let (p, r, f) = common::oracles::prf(&preds, &labels, 0.5);
        prop_assert!((m.precision - p).abs() < 1e-12 && (m.recall - r).abs() < 1e-12 && (m.f1 - f).abs() < 1e-12);
    }

    #[test]
    fn recall_at_loc_monotone_in_budget(fs in scored(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(recall_at_loc(&fs, lo).unwrap() <= recall_at_loc(&fs, hi).unwrap());
    }

    #[test]
    fn effort_monotone_in_target(fs in scored(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(effort_at_recall(&fs, lo).unwrap() <= effort_at_recall(&fs, hi).unwrap());
    }

    #[test]
    fn mfr_bounded_by_longest_function(fs in scored()) {
        let longest = fs.iter().map(|f| f.line_scores.len()).max().unwrap() as f64;
        let m = mfr(&fs).unwrap();
        prop_assert!((1.0..=longest).contains(&m));
    }

    #[test]
    fn short_functions_always_hit_top10(seed in any::<u64>()) {
        let fs = common::random_scored(&mut ChaCha8Rng::seed_from_u64(seed), 10, 10);
        prop_assert_eq!(top10_accuracy(&fs).unwrap(), 1.0);
    }

    #[test]
    fn line_metrics_match_oracles(fs in scored(), t in 0.0f64..1.0) {
        prop_assert!((top10_accuracy(&fs).unwrap() - common::oracles::top10(&fs)).abs() < 1e-9);
        prop_assert!((mfr(&fs).unwrap() - common::oracles::mfr(&fs)).abs() < 1e-9);
        prop_assert!((effort_at_recall(&fs, t).unwrap() - common::oracles::effort(&fs, t)).abs() < 1e-9);
        prop_assert!((recall_at_loc(&fs, t).unwrap() - common::oracles::recall_at(&fs, t)).abs() < 1e-9);
    }

    #[test]
    fn exact_wilcoxon_matches_enumeration(diffs in prop::collection::vec(-4i32..=4, 1..=12)) {
        let pairs: Vec<(f64, f64)> = diffs.iter().map(|&d| (d as f64 * 0.5, 0.0)).collect();
        prop_assume!(pairs.iter().any(|p| p.0 != 0.0));
        let w = wilcoxon_signed_rank(&pairs).unwrap();
        prop_assert!(w.exact);
        prop_assert!((w.p_value - common::oracles::wilcoxon_p(&pairs)).abs() < 1e-12);
    }
}

#[test]
fn recall_at_one_percent_with_ties_across_functions() {
    let fs = vec![
        ScoredFunction {
            id: "a".into(),
            line_scores: vec![1.0; 50],
            vuln_lines: vec![50],
        },
        ScoredFunction {
            id: "b".into(),
            line_scores: vec![1.0; 50],
            vuln_lines: vec![1],
        },
    ];
    // 1 line inspected: a:1 first in order
    assert_eq!(recall_at_loc(&fs, 0.01).unwrap(), 0.0);
    assert_eq!(recall_at_loc(&fs, 0.51).unwrap(), 1.0);
    assert_eq!(effort_at_recall(&fs, 0.5).unwrap(), 0.5);
}
