//! Surrogate model properties.

use std::sync::OnceLock;

use latent_sv::dataset::{Label, LabeledFunction, Provenance};
use latent_sv::forge::corpus::{synthetic_corpus, CorpusSpec};
use latent_sv::surrogate::TokenModel;
use proptest::prelude::*;

fn model() -> &'static (TokenModel, Vec<LabeledFunction>) {
    static MODEL: OnceLock<(TokenModel, Vec<LabeledFunction>)> = OnceLock::new();
    MODEL.get_or_init(|| {
        let corpus = synthetic_corpus(&CorpusSpec {
            n_originals: 200,
            vulnerable_fraction: 0.5,
            label_noise: 0.0,
            ..CorpusSpec::default()
        });
        (
            TokenModel::fit(&corpus.originals, 1.0).unwrap(),
            corpus.originals,
        )
    })
}

fn function(i: usize, body: String, vulnerable: bool) -> LabeledFunction {
    LabeledFunction {
        id: format!("s{i}"),
        body,
        label: if vulnerable {
            Label::Vulnerable
        } else {
            Label::Nonvulnerable
        },
        vuln_line_nos: vec![],
        provenance: Provenance::Original,
        origin_id: None,
        project: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn whitespace_runs_do_not_move_predictions(idx in 0usize..200, runs in prop::collection::vec(0usize..4, 1..10)) {
        let (m, fs) = model();
        let body = &fs[idx].body;
        let pool = [" ", "  ", "\t", "\n    "];
        let mut k = 0;
        let edited: String = body
            .split(' ')
            .collect::<Vec<_>>()
            .join("\u{0}")
            .split('\u{0}')
            .enumerate()
            .map(|(i, part)| {
                if i == 0 {
                    part.to_string()
                } else {
                    k += 1;
                    format!("{}{part}", pool[runs[k % runs.len()]])
                }
            })
            .collect();
        prop_assert_eq!(m.predict_proba(body), m.predict_proba(&edited));
    }

    #[test]
    fn embeddings_are_unit_or_zero(body in "[a-z0-9_ ();+=*]{0,60}") {
        let (m, _) = model();
        let n = m.embed(&body).dims.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9, "norm {}", n);
    }

    #[test]
    fn separable_corpus_is_fit_exactly(seed in any::<u64>(), n in 2usize..40) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let train: Vec<_> = (0..n)
            .map(|i| {
                let vulnerable = i % 2 == 0;
                let marker = if vulnerable { "memcpy_unchecked" } else { "bounds_checked" };
                let filler: Vec<String> = (0..rng.gen_range(0..6)).map(|_| format!("t{}", rng.gen_range(0..4))).collect();
                function(i, format!("int f(void) {{ {marker}(p); {} }}", filler.join(" ")), vulnerable)
            })
            .collect();
        let m = TokenModel::fit(&train, 1.0).unwrap();
        for f in &train {
            prop_assert_eq!(m.predict_proba(&f.body) > 0.5, f.is_vulnerable());
        }
    }
}
