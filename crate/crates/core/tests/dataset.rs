//! Split, attach and purge properties, and overlap classification against a
//! linear scan.

use std::collections::HashSet;

use latent_sv::dataset::{
    attach_latents, build_round, build_rounds, leakage_purge, split, NoiseContext, Provenance,
    RoundSpec,
};
use latent_sv::extract::norm_hash;
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::mine::{classify_all, overlap_report, MatchMode, OverlapClass, OverlapIndex};
use proptest::prelude::*;

fn small_corpus(seed: u64, n: usize) -> latent_sv::forge::corpus::SyntheticCorpus {
    synthetic_corpus(&CorpusSpec {
        seed,
        n_originals: n,
        n_latents: n,
        filler_tokens: 6,
        filler_statements: 1,
        ..CorpusSpec::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn round_protocol(seed in any::<u64>(), n in 10usize..120) {
        let corpus = small_corpus(seed, n);
        let spec = RoundSpec::new(seed % 1000, 0).with_latent(Default::default());
        let round = build_round(&corpus.originals, &corpus.candidates, &spec, seed % 1000, NoiseContext::default()).unwrap();
        let held: HashSet<String> = round.val.iter().chain(&round.test).map(|f| norm_hash(f.body.as_bytes())).collect();
        prop_assert!(round.train.iter().all(|f| !held.contains(&norm_hash(f.body.as_bytes()))));
        prop_assert!(round.val.iter().chain(&round.test).all(|f| f.provenance == Provenance::Original));

        let (train, val, test) = split(&corpus.originals, &spec).unwrap();
        prop_assert_eq!(&val, &round.val);
        prop_assert_eq!(&test, &round.test);
        prop_assert_eq!(train.len() + val.len() + test.len(), n);
        let known = corpus.originals.iter().map(|f| f.id.clone()).collect();
        let (attached, report) = attach_latents(&train, &corpus.candidates, &known, &spec, NoiseContext::default()).unwrap();
        prop_assert!(attached.len() >= train.len());
        prop_assert_eq!(attached.len(), train.len() + report.added - report.relabeled);
        let train_ids: HashSet<&str> = train.iter().map(|f| f.id.as_str()).collect();
        prop_assert!(attached
            .iter()
            .filter(|f| f.provenance == Provenance::Latent)
            .all(|f| train_ids.contains(f.origin_id.as_deref().unwrap())));

        let (purged, purge) = leakage_purge(&attached, &val, &test);
        prop_assert_eq!(purged.len() + purge.removed, attached.len());
        let (again, second) = leakage_purge(&purged, &val, &test);
        prop_assert_eq!((again, second.removed), (purged, 0));
    }

    #[test]
    fn overlap_matches_linear_scan(
        vuln in prop::collection::vec("[ab ]{0,4}", 0..12),
        non in prop::collection::vec("[ab ]{0,4}", 0..12),
        bodies in prop::collection::vec("[ab ]{0,4}", 1..30),
        normalized in any::<bool>(),
    ) {
        let corpus = small_corpus(1, 10);
        let mut cands: Vec<_> = bodies
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut c = corpus.candidates[i % corpus.candidates.len()].clone();
                c.snapshot.body = b.clone();
                c
            })
            .collect();
        let mode = if normalized { MatchMode::Normalized } else { MatchMode::Exact };
        let index = OverlapIndex::new(mode, vuln.iter().map(String::as_str), non.iter().map(String::as_str));
        classify_all(&mut cands, &index);
        let same = |a: &str, b: &str| if normalized {
            a.split_whitespace().collect::<Vec<_>>() == b.split_whitespace().collect::<Vec<_>>()
        } else {
            a == b
        };
        for c in &cands {
            let expected = if vuln.iter().any(|v| same(v, &c.snapshot.body)) {
                OverlapClass::OriginallyVulnerable
            } else if non.iter().any(|v| same(v, &c.snapshot.body)) {
                OverlapClass::OriginallyNonvulnerable
            } else {
                OverlapClass::Missing
            };
            prop_assert_eq!(c.overlap, expected);
        }
        let r = overlap_report(&cands).unwrap();
        prop_assert_eq!(r.n_originally_vulnerable + r.n_originally_nonvulnerable + r.n_missing, r.total);
        prop_assert_eq!(r.total, cands.len());
        prop_assert!((r.percentages.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }
}

#[test]
fn ten_rounds_ten_seeds() {
    let corpus = small_corpus(5, 200);
    let rounds = build_rounds(
        &corpus.originals,
        &corpus.candidates,
        RoundSpec::new(0, 0),
        42,
        10,
        NoiseContext::default(),
    )
    .unwrap();
    let seeds: HashSet<u64> = rounds.iter().map(|r| r.spec.seed).collect();
    assert_eq!(seeds.len(), 10);
    let digests: HashSet<&str> = rounds.iter().map(|r| r.manifest.digest.as_str()).collect();
    assert_eq!(digests.len(), 10);
    let again = build_rounds(
        &corpus.originals,
        &corpus.candidates,
        RoundSpec::new(0, 0),
        42,
        10,
        NoiseContext::default(),
    )
    .unwrap();
    for (a, b) in rounds.iter().zip(&again) {
        assert_eq!(a.manifest.digest, b.manifest.digest);
    }
}

#[test]
fn ten_functions_split_eight_one_one() {
    let corpus = small_corpus(3, 10);
    for s in 0..10 {
        let (a, b, c) = split(&corpus.originals, &RoundSpec::new(s, 0)).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
    }
}
