//! Train the token model with and without latent versions on a synthetic
//! corpus and compare recall on the test split and on held-out latents.
//!
//!     cargo run --release --example latent_recall -- [rounds] [seed]

use std::collections::HashSet;

use latent_sv::dataset::{build_round, NoiseContext, RoundSpec};
use latent_sv::eval::{label_map, latent_recall, prf, PredictionRecord, DEFAULT_THRESHOLD};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::surrogate::TokenModel;

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

fn main() -> latent_sv::Result<()> {
    let mut args = std::env::args().skip(1);
    let rounds: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let corpus = synthetic_corpus(&CorpusSpec {
        seed,
        ..CorpusSpec::default()
    });
    println!("round  recall(base)  recall(latent)  latent_recall(base)  latent_recall(latent)");
    for r in 0..rounds {
        let base_spec = RoundSpec::new(seed, r);
        let mut row = Vec::new();
        for spec in [base_spec, base_spec.with_latent(Default::default())] {
            let round = build_round(
                &corpus.originals,
                &corpus.candidates,
                &spec,
                seed,
                NoiseContext::default(),
            )?;
            let model = TokenModel::fit(&round.train, 1.0)?;
            let preds = predict(
                &model,
                round.test.iter().map(|f| (f.id.clone(), f.body.clone())),
            );
            let recall = prf(&preds, &label_map(&round.test), DEFAULT_THRESHOLD)?.recall;
            let test_ids: HashSet<&str> = round.test.iter().map(|f| f.id.as_str()).collect();
            let held_out = predict(
                &model,
                corpus
                    .candidates
                    .iter()
                    .filter(|c| test_ids.contains(c.origin.as_str()))
                    .map(|c| (c.id.clone(), c.snapshot.body.clone())),
            );
            row.push((recall, latent_recall(&held_out, DEFAULT_THRESHOLD)?));
        }
        println!(
            "{r:>5}  {:>12.3}  {:>14.3}  {:>19.3}  {:>21.3}",
            row[0].0, row[1].0, row[0].1, row[1].1
        );
    }
    Ok(())
}
