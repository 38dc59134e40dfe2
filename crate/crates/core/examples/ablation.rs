//! Train on shrinking fractions of the vulnerable originals, with and
//! without their latent versions, and score a fixed test split.
//!
//!     cargo run --release --example ablation

use std::collections::HashSet;

use latent_sv::dataset::{ablation_series, split, LabeledFunction, RoundSpec, ABLATION_FRACTIONS};
use latent_sv::eval::{label_map, prf, PredictionRecord, DEFAULT_THRESHOLD};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::surrogate::TokenModel;

fn f1(train: &[LabeledFunction], test: &[LabeledFunction]) -> latent_sv::Result<f64> {
    let model = TokenModel::fit(train, 1.0)?;
    let preds: Vec<PredictionRecord> = test
        .iter()
        .map(|f| PredictionRecord {
            id: f.id.clone(),
            p_vulnerable: model.predict_proba(&f.body),
            line_scores: None,
            hard_label: None,
        })
        .collect();
    Ok(prf(&preds, &label_map(test), DEFAULT_THRESHOLD)?.f1)
}

fn main() -> latent_sv::Result<()> {
    let corpus = synthetic_corpus(&CorpusSpec::default());
    let (train, _, test) = split(&corpus.originals, &RoundSpec::new(0, 0))?;
    let in_train: HashSet<&str> = train.iter().map(|f| f.id.as_str()).collect();
    let latents: Vec<LabeledFunction> = corpus
        .candidates
        .iter()
        .filter(|c| in_train.contains(c.origin.as_str()))
        .map(LabeledFunction::from_candidate)
        .collect();
    let with = ablation_series(&train, &latents, &ABLATION_FRACTIONS, 7)?;
    let without = ablation_series(&train, &[], &ABLATION_FRACTIONS, 7)?;
    println!("fraction  functions  f1(original)  f1(+latent)");
    for (a, b) in without.iter().zip(&with) {
        println!(
            "{:>8.1}  {:>9}  {:>12.3}  {:>11.3}",
            a.fraction,
            b.functions.len(),
            f1(&a.functions, &test)?,
            f1(&b.functions, &test)?
        );
    }
    println!("full original training split: f1 {:.3}", f1(&train, &test)?);
    Ok(())
}
