//! Acceptance checks, one PASS/FAIL line each. Run with
//! `cargo test -p latent-sv --test acceptance`.

mod common;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use latent_sv::dataset::{build_round, split, NoiseContext, Provenance, RoundSpec};
use latent_sv::eval::{
    effect_size_r, effort_at_recall, label_map, latent_recall, mfr, prf, recall_at_loc,
    top10_accuracy, wilcoxon_signed_rank, PredictionRecord, DEFAULT_THRESHOLD,
};
use latent_sv::extract::norm_hash;
use latent_sv::filter::{
    filter_cr, filter_lic, filter_st, Centroids, ExternalProbabilities, ExternalVectors,
    FeatureVector,
};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::forge::presets::EXACT_PRESETS;
use latent_sv::forge::FpReason;
use latent_sv::mine::{
    classify_all, overlap_report, LatentCandidate, MatchMode, OverlapClass, OverlapIndex,
};
use latent_sv::surrogate::TokenModel;
use latent_sv::trace::{HopKind, LineTrace, TraceConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($msg)+));
        }
    };
}

fn szz_correctness() -> Outcome {
    let start = Instant::now();
    let cfg = TraceConfig::default();
    let presets = [
        "clean-chain",
        "whitespace-skip",
        "rename-file",
        "extract-method-move",
    ];
    let (mut histories, mut lines, mut correct) = (0, 0, 0);
    for name in presets {
        for seed in 0..50 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let p = common::run(name, seed, dir.path(), &cfg);
            histories += 1;
            for run in &p.per_vuln {
                for (t, l) in run.traces.iter().zip(&run.planted.lines) {
                    lines += 1;
                    correct += usize::from(t.vic.hash == l.traced_to);
                }
                lines += 1;
                correct += usize::from(common::vic_of(run) == run.planted.vic_hash);
            }
        }
    }
    let elapsed = start.elapsed();
    ensure!(histories == 200, "{histories} histories");
    ensure!(correct == lines, "VIC accuracy {correct}/{lines}");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{histories} histories, {correct}/{lines} VICs, {elapsed:.1?}"
    ))
}

fn latent_enumeration() -> Outcome {
    let cfg = TraceConfig::default();
    let mut checked = 0;
    for name in EXACT_PRESETS {
        for seed in 0..10 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let p = common::run(name, seed, dir.path(), &cfg);
            for run in &p.per_vuln {
                let expected: BTreeSet<_> = run.planted.latents.iter().cloned().collect();
                ensure!(
                    common::mined_set(run) == expected,
                    "{name}/{seed}: latent set differs"
                );
                ensure!(
                    run.candidates.len() == expected.len(),
                    "{name}/{seed}: duplicate candidates"
                );
                checked += 1;
            }
        }
    }
    let mut sims = Vec::new();
    for seed in 0..10 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let p = common::run("near-identical-line-trap", seed, dir.path(), &cfg);
        let run = &p.per_vuln[0];
        let v = &run.planted;
        let fps: BTreeSet<_> = v
            .expected_false_positives
            .iter()
            .filter(|f| f.reason == FpReason::IncorrectLineMapping)
            .map(|f| f.latent.clone())
            .collect();
        ensure!(!fps.is_empty(), "trap {seed}: no planted false positive");
        ensure!(
            fps.is_subset(&common::mined_set(run)),
            "trap {seed}: false positive not produced"
        );
        let hop = run
            .traces
            .iter()
            .flat_map(|t| &t.hops)
            .find(|h| h.kind == HopKind::Mapped && h.commit.hash == v.vic_hash);
        let sim = hop
            .and_then(|h| h.similarity)
            .ok_or(format!("trap {seed}: no mapped hop"))?;
        ensure!((0.75..1.0).contains(&sim), "trap {seed}: similarity {sim}");
        sims.push(sim);
    }
    let (lo, hi) = sims
        .iter()
        .fold((1.0f64, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    Ok(format!(
        "{checked} exact histories; trap hop similarity in [{lo:.3}, {hi:.3}]"
    ))
}

fn random_preds(rng: &mut ChaCha8Rng, n: usize) -> (Vec<PredictionRecord>, HashMap<String, bool>) {
    let preds = (0..n)
        .map(|i| PredictionRecord {
            id: format!("f{i:03}"),
            p_vulnerable: rng.gen_range(0..=8) as f64 / 8.0,
            line_scores: None,
            hard_label: None,
        })
        .collect();
    let labels = (0..n)
        .map(|i| (format!("f{i:03}"), rng.gen_bool(0.4)))
        .collect();
    (preds, labels)
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let fs = common::random_scored(&mut rng, 50, 100);
        let (preds, labels) = random_preds(&mut rng, fs.len());
        let m = prf(&preds, &labels, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
        let (p, r, f) = common::oracles::prf(&preds, &labels, DEFAULT_THRESHOLD);
        let t: f64 = rng.gen_range(0.0..1.0);
        let pairs = [
            (m.precision, p),
            (m.recall, r),
            (m.f1, f),
            (top10_accuracy(&fs).unwrap(), common::oracles::top10(&fs)),
            (mfr(&fs).unwrap(), common::oracles::mfr(&fs)),
            (
                effort_at_recall(&fs, 0.2).unwrap(),
                common::oracles::effort(&fs, 0.2),
            ),
            (
                effort_at_recall(&fs, t).unwrap(),
                common::oracles::effort(&fs, t),
            ),
            (
                recall_at_loc(&fs, 0.01).unwrap(),
                common::oracles::recall_at(&fs, 0.01),
            ),
            (
                recall_at_loc(&fs, t).unwrap(),
                common::oracles::recall_at(&fs, t),
            ),
        ];
        for (k, (a, b)) in pairs.iter().enumerate() {
            let d = (a - b).abs();
            ensure!(d <= 1e-9, "instance {i}, metric {k}: {a} vs {b}");
            worst = worst.max(d);
        }
    }
    Ok(format!("1000 instances, max abs deviation {worst:e}"))
}

fn wilcoxon_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = 0;
    for n in 1..=12 {
        for _ in 0..40 {
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    let d =
                        rng.gen_range(1..=5) as f64 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    (0.5 + d / 10.0, 0.5)
                })
                .collect();
            let w = wilcoxon_signed_rank(&pairs).map_err(|e| e.to_string())?;
            let oracle = common::oracles::wilcoxon_p(&pairs);
            ensure!(w.exact, "n={n} not exact");
            ensure!(
                (w.p_value - oracle).abs() < 1e-12,
                "n={n}: {} vs {oracle}",
                w.p_value
            );
            cases += 1;
        }
    }
    let five: Vec<(f64, f64)> = (1..=5).map(|i| (0.5 + i as f64 / 100.0, 0.5)).collect();
    let p5 = wilcoxon_signed_rank(&five)
        .map_err(|e| e.to_string())?
        .p_value;
    ensure!(p5 == 0.03125, "n=5 all positive: {p5}");
    let e = effect_size_r(2.0, 100);
    ensure!(
        (e.r - 0.2).abs() < 1e-15 && e.non_negligible,
        "effect size {e:?}"
    );
    Ok(format!(
        "{cases} enumerations agree; n=5 p={p5}; r(2,100)={}",
        e.r
    ))
}

fn predict(
    model: &TokenModel,
    items: impl Iterator<Item = (String, String)>,
) -> Vec<PredictionRecord> {
    items
        .map(|(id, body)| PredictionRecord {
            p_vulnerable: model.predict_proba(&body),
            id,
            line_scores: None,
            hard_label: None,
        })
        .collect()
}

fn directional() -> Outcome {
    let start = Instant::now();
    let spec = CorpusSpec::default();
    let corpus = synthetic_corpus(&spec);
    ensure!(
        corpus.originals.len() == 500
            && corpus.candidates.len() == 2000
            && corpus.flipped.len() == 25,
        "corpus shape"
    );
    let (mut wins, mut base_lr, mut latent_lr) = (0, 0.0, 0.0);
    for r in 0..10 {
        let base = RoundSpec::new(spec.seed, r);
        let mut row = Vec::new();
        for round_spec in [base, base.with_latent(Default::default())] {
            let round = build_round(
                &corpus.originals,
                &corpus.candidates,
                &round_spec,
                spec.seed,
                NoiseContext::default(),
            )
            .map_err(|e| e.to_string())?;
            let model = TokenModel::fit(&round.train, 1.0).map_err(|e| e.to_string())?;
            let preds = predict(
                &model,
                round.test.iter().map(|f| (f.id.clone(), f.body.clone())),
            );
            let recall = prf(&preds, &label_map(&round.test), DEFAULT_THRESHOLD)
                .map_err(|e| e.to_string())?
                .recall;
            let test_ids: HashSet<&str> = round.test.iter().map(|f| f.id.as_str()).collect();
            let held_out = predict(
                &model,
                corpus
                    .candidates
                    .iter()
                    .filter(|c| test_ids.contains(c.origin.as_str()))
                    .map(|c| (c.id.clone(), c.snapshot.body.clone())),
            );
            row.push((
                recall,
                latent_recall(&held_out, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?,
            ));
        }
        wins += usize::from(row[1].0 > row[0].0);
        base_lr += row[0].1 / 10.0;
        latent_lr += row[1].1 / 10.0;
    }
    let ratio = latent_lr / base_lr;
    let elapsed = start.elapsed();
    let detail = format!(
        "recall improved in {wins}/10 rounds; latent_recall {latent_lr:.3} vs {base_lr:.3} (x{ratio:.2}); {elapsed:.1?}"
    );
    ensure!(wins >= 9, "{detail}");
    ensure!(ratio >= 1.5, "{detail}");
    ensure!(elapsed < Duration::from_secs(300), "{detail}");
    Ok(detail)
}

fn ordered_subset(out: &[LatentCandidate], input: &[LatentCandidate]) -> bool {
    let mut it = input.iter();
    out.iter()
        .all(|o| it.any(|c| c.id == o.id && c.snapshot == o.snapshot))
}

fn filter_properties() -> Outcome {
    use common::fixtures::{candidate, commit, trace_to};
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let fv = |d: Vec<f64>| FeatureVector {
        dims: d,
        vocab_id: "v".into(),
    };
    let centroids = Centroids::fit(&[fv(vec![1.0, 0.0, 1.0])], &[fv(vec![0.0, 1.0, 1.0])])
        .map_err(|e| e.to_string())?;
    let mut boundaries = [0usize; 3];
    for set in 0..100 {
        let n = rng.gen_range(1..40);
        let cs: Vec<LatentCandidate> = (0..n)
            .map(|i| candidate(i, rng.gen_range(0..3), rng.gen_range(0..10) * 10))
            .collect();

        let vics: Vec<i64> = (0..3).map(|_| rng.gen_range(0..10) * 10).collect();
        let traces: HashMap<String, Vec<LineTrace>> = vics
            .iter()
            .enumerate()
            .map(|(o, &d)| (format!("o{o}"), vec![trace_to(commit(10 + o, d))]))
            .collect();
        let lic = filter_lic(&cs, &traces).map_err(|e| e.to_string())?;
        ensure!(ordered_subset(&lic, &cs), "set {set}: LIC not a subset");
        ensure!(
            filter_lic(&lic, &traces).map_err(|e| e.to_string())? == lic,
            "set {set}: LIC not idempotent"
        );
        for c in cs.iter().filter(|c| {
            c.interm_commit.author_date == vics[c.origin[1..].parse::<usize>().unwrap()]
        }) {
            ensure!(
                lic.iter().any(|k| k.id == c.id),
                "set {set}: LIC dropped a same-date candidate"
            );
            boundaries[0] += 1;
        }

        let probs: Vec<f64> = cs
            .iter()
            .map(|_| rng.gen_range(0..=8) as f64 / 8.0)
            .collect();
        let scorer = ExternalProbabilities::from_pairs(
            cs.iter().zip(&probs).map(|(c, &p)| (c.id.clone(), p)),
        );
        let st = filter_st(&cs, &scorer).map_err(|e| e.to_string())?;
        ensure!(ordered_subset(&st, &cs), "set {set}: ST not a subset");
        ensure!(
            filter_st(&st, &scorer).map_err(|e| e.to_string())? == st,
            "set {set}: ST not idempotent"
        );
        for (c, _) in cs.iter().zip(&probs).filter(|(_, &p)| p == 0.5) {
            ensure!(
                st.iter().any(|k| k.id == c.id),
                "set {set}: ST dropped p = 0.5"
            );
            boundaries[1] += 1;
        }

        let dims: Vec<Vec<f64>> = cs
            .iter()
            .map(|_| (0..3).map(|_| rng.gen_range(-3..=3) as f64).collect())
            .collect();
        let vectors = ExternalVectors::from_pairs(
            "v",
            cs.iter().zip(&dims).map(|(c, d)| (c.id.clone(), d.clone())),
        );
        let cr = filter_cr(&cs, &vectors, &centroids).map_err(|e| e.to_string())?;
        ensure!(ordered_subset(&cr, &cs), "set {set}: CR not a subset");
        ensure!(
            filter_cr(&cr, &vectors, &centroids).map_err(|e| e.to_string())? == cr,
            "set {set}: CR not idempotent"
        );
        for (c, _) in cs.iter().zip(&dims).filter(|(_, d)| d[0] == d[1]) {
            ensure!(
                cr.iter().any(|k| k.id == c.id),
                "set {set}: CR dropped an equidistant vector"
            );
            boundaries[2] += 1;
        }
    }
    ensure!(
        boundaries.iter().all(|&b| b > 0),
        "boundary cases never generated: {boundaries:?}"
    );
    Ok(format!(
        "100 sets per filter; boundary cases kept (LIC {}, ST {}, CR {})",
        boundaries[0], boundaries[1], boundaries[2]
    ))
}

fn dataset_protocol() -> Outcome {
    let mut seeds = HashSet::new();
    let mut purged = 0;
    for r in 0..10 {
        let mut corpus = synthetic_corpus(&CorpusSpec {
            seed: 100 + r as u64,
            n_originals: 300,
            n_latents: 600,
            filler_tokens: 5,
            filler_statements: 1,
            ..CorpusSpec::default()
        });
        // re-indented copies of some originals, so duplicates straddle the split
        for i in 0..30 {
            let mut copy = corpus.originals[i * 7].clone();
            copy.id = format!("copy-{i}");
            copy.body = copy.body.replace("    ", "\t");
            corpus.originals.push(copy);
        }
        let spec = RoundSpec::new(1000, r).with_latent(Default::default());
        let round = build_round(
            &corpus.originals,
            &corpus.candidates,
            &spec,
            1000,
            NoiseContext::default(),
        )
        .map_err(|e| e.to_string())?;
        let held: HashSet<String> = round
            .val
            .iter()
            .chain(&round.test)
            .map(|f| norm_hash(f.body.as_bytes()))
            .collect();
        let leaks = round
            .train
            .iter()
            .filter(|f| held.contains(&norm_hash(f.body.as_bytes())))
            .count();
        ensure!(leaks == 0, "round {r}: {leaks} leaked bodies");
        ensure!(
            round
                .val
                .iter()
                .chain(&round.test)
                .all(|f| f.provenance == Provenance::Original),
            "round {r}: latent outside train"
        );
        purged += round.manifest.counts.purged;
        seeds.insert(round.manifest.spec.seed);
    }
    ensure!(seeds.len() == 10, "{} distinct seeds", seeds.len());
    ensure!(purged > 0, "planted duplicates were never purged");
    let ten = synthetic_corpus(&CorpusSpec {
        n_originals: 10,
        n_latents: 0,
        ..CorpusSpec::default()
    });
    let (a, b, c) = split(&ten.originals, &RoundSpec::new(0, 0)).map_err(|e| e.to_string())?;
    ensure!(
        (a.len(), b.len(), c.len()) == (8, 1, 1),
        "split sizes {:?}",
        (a.len(), b.len(), c.len())
    );
    Ok(format!(
        "no leakage over 10 rounds ({purged} purged); latents train-only; 10 seeds; 8/1/1"
    ))
}

fn overlap_accounting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = synthetic_corpus(&CorpusSpec {
        n_originals: 200,
        n_latents: 400,
        ..CorpusSpec::default()
    });
    let vuln: Vec<&str> = corpus
        .originals
        .iter()
        .filter(|f| f.is_vulnerable())
        .map(|f| f.body.as_str())
        .collect();
    let non: Vec<&str> = corpus
        .originals
        .iter()
        .filter(|f| !f.is_vulnerable())
        .map(|f| f.body.as_str())
        .collect();
    let mut cands = corpus.candidates.clone();
    for c in cands.iter_mut() {
        match rng.gen_range(0..3) {
            0 => c.snapshot.body = vuln.choose(&mut rng).unwrap().to_string(),
            1 => c.snapshot.body = non.choose(&mut rng).unwrap().to_string(),
            _ => {}
        }
    }
    let index = OverlapIndex::new(MatchMode::Exact, vuln.iter().copied(), non.iter().copied());
    classify_all(&mut cands, &index);
    for c in &cands {
        let expected = if vuln.iter().any(|b| *b == c.snapshot.body) {
            OverlapClass::OriginallyVulnerable
        } else if non.iter().any(|b| *b == c.snapshot.body) {
            OverlapClass::OriginallyNonvulnerable
        } else {
            OverlapClass::Missing
        };
        ensure!(
            c.overlap == expected,
            "{}: {:?} vs {expected:?}",
            c.id,
            c.overlap
        );
    }
    let r = overlap_report(&cands).map_err(|e| e.to_string())?;
    ensure!(
        r.n_originally_vulnerable + r.n_originally_nonvulnerable + r.n_missing == r.total,
        "counts do not sum"
    );
    ensure!(r.total == cands.len(), "total {}", r.total);
    Ok(format!(
        "{} items: {} vulnerable, {} non-vulnerable, {} missing",
        r.total, r.n_originally_vulnerable, r.n_originally_nonvulnerable, r.n_missing
    ))
}

fn main() {
    let checks: [Check; 8] = [
        ("szz-correctness", szz_correctness),
        ("latent-enumeration", latent_enumeration),
        ("metric-oracles", metric_oracles),
        ("wilcoxon-exactness", wilcoxon_exactness),
        ("directional-end-to-end", directional),
        ("filter-properties", filter_properties),
        ("dataset-protocol", dataset_protocol),
        ("overlap-accounting", overlap_accounting),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
