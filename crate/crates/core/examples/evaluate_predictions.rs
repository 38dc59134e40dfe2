//! Score one test split with the token model and report function-level and
//! line-level metrics.
//!
//!     cargo run --example evaluate_predictions

use latent_sv::dataset::{build_round, NoiseContext, RoundSpec};
use latent_sv::eval::{evaluate, PredictionRecord, DEFAULT_THRESHOLD};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::surrogate::TokenModel;

fn main() -> latent_sv::Result<()> {
    let corpus = synthetic_corpus(&CorpusSpec::default());
    let spec = RoundSpec::new(0, 0).with_latent(Default::default());
    let round = build_round(
        &corpus.originals,
        &corpus.candidates,
        &spec,
        0,
        NoiseContext::default(),
    )?;
    let model = TokenModel::fit(&round.train, 1.0)?;
    let preds: Vec<PredictionRecord> = round
        .test
        .iter()
        .map(|f| PredictionRecord {
            id: f.id.clone(),
            p_vulnerable: model.predict_proba(&f.body),
            line_scores: Some(model.line_scores(&f.body)),
            hard_label: None,
        })
        .collect();
    let report = evaluate(&preds, &round.test, DEFAULT_THRESHOLD)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
