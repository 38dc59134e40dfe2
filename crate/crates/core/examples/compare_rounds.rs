//! Ten rounds with and without latent versions, summarized as mean (best)
//! and compared round by round with a one-sided signed-rank test.
//!
//!     cargo run --release --example compare_rounds

use latent_sv::dataset::{build_round, NoiseContext, Round, RoundSpec};
use latent_sv::eval::{
    compare_rounds, evaluate, format_table, summarize, MetricsReport, PredictionRecord,
    DEFAULT_THRESHOLD,
};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::surrogate::TokenModel;

fn score(round: &Round) -> latent_sv::Result<MetricsReport> {
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
    evaluate(&preds, &round.test, DEFAULT_THRESHOLD)
}

fn main() -> latent_sv::Result<()> {
    let corpus = synthetic_corpus(&CorpusSpec::default());
    let (mut base, mut latent) = (Vec::new(), Vec::new());
    for r in 0..10 {
        let spec = RoundSpec::new(0, r);
        let ctx = NoiseContext::default();
        base.push(score(&build_round(
            &corpus.originals,
            &corpus.candidates,
            &spec,
            0,
            ctx,
        )?)?);
        latent.push(score(&build_round(
            &corpus.originals,
            &corpus.candidates,
            &spec.with_latent(Default::default()),
            0,
            ctx,
        )?)?);
    }
    let rows = vec![
        ("original".to_string(), summarize(&base)?),
        ("+latent".to_string(), summarize(&latent)?),
    ];
    print!("{}", format_table(&rows));
    println!();
    for metric in ["f1", "recall", "mfr"] {
        match compare_rounds(metric, &latent, &base) {
            Ok(c) => println!(
                "{metric:>8}: W+={:.1} n={} p={:.4}{} r={:.3}{}",
                c.test.w_plus,
                c.test.n,
                c.test.p_value,
                if c.test.exact { " (exact)" } else { "" },
                c.effect.r,
                if c.effect.non_negligible {
                    ""
                } else {
                    " (negligible)"
                }
            ),
            Err(e) => println!("{metric:>8}: {e}"),
        }
    }
    Ok(())
}
