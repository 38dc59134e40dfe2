//! A small token log-odds classifier and line scorer.
//!
//! Serves as the default self-training scorer and centroid embedder, and lets
//! the pipeline run end to end without an external model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Label, LabeledFunction};
use crate::error::{Error, Result};
use crate::filter::{Embedder, FeatureVector, NonVulnScorer};

const MULTI_OPS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "::", "##",
];

fn word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80
}

/// Split C-like source into identifiers, numbers, operators and literals.
/// Comments are dropped; whitespace runs inside string literals collapse to
/// one space so layout never changes a token.
pub fn tokenize(body: &str) -> Vec<String> {
    let src = body.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let c = src[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'/' && src.get(i + 1) == Some(&b'/') {
            while i < src.len() && src[i] != b'\n' {
                i += 1;
            }
        } else if c == b'/' && src.get(i + 1) == Some(&b'*') {
            i += 2;
            while i < src.len() && !(src[i] == b'*' && src.get(i + 1) == Some(&b'/')) {
                i += 1;
            }
            i = (i + 2).min(src.len());
        } else if c == b'"' || c == b'\'' {
            let start = i;
            i += 1;
            while i < src.len() && src[i] != c && src[i] != b'\n' {
                i += if src[i] == b'\\' { 2 } else { 1 };
            }
            i = (i + 1).min(src.len());
            let lit = String::from_utf8_lossy(&src[start..i]);
            out.push(crate::extract::normalize_body(&lit));
        } else if word_byte(c) {
            let start = i;
            while i < src.len() && word_byte(src[i]) {
                i += 1;
            }
            out.push(String::from_utf8_lossy(&src[start..i]).into_owned());
        } else {
            let rest = &src[i..];
            let op = MULTI_OPS
                .iter()
                .find(|op| rest.starts_with(op.as_bytes()))
                .map(|op| op.len())
                .unwrap_or(1);
            out.push(String::from_utf8_lossy(&src[i..i + op]).into_owned());
            i += op;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenModel {
    pub vocab: Vec<String>,
    pub log_odds: Vec<f64>,
    pub prior: f64,
    pub vocab_id: String,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

fn vocab_id_of(vocab: &[String]) -> String {
    let mut h = Sha256::new();
    for t in vocab {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    format!("nb-{}", &hex::encode(h.finalize())[..16])
}

impl TokenModel {
    pub fn fit(train: &[LabeledFunction], smoothing: f64) -> Result<TokenModel> {
        let mut counts: BTreeMap<String, [f64; 2]> = BTreeMap::new();
        let mut totals = [0.0f64; 2];
        let mut docs = [0usize; 2];
        for f in train {
            let class = usize::from(f.label == Label::Nonvulnerable);
            docs[class] += 1;
            for t in tokenize(&f.body) {
                counts.entry(t).or_default()[class] += 1.0;
                totals[class] += 1.0;
            }
        }
        if docs[0] == 0 || docs[1] == 0 {
            return Err(Error::SingleClassTrainingSet);
        }
        let v = counts.len() as f64;
        let denom_v = totals[0] + smoothing * v;
        let denom_n = totals[1] + smoothing * v;
        let mut vocab = Vec::with_capacity(counts.len());
        let mut log_odds = Vec::with_capacity(counts.len());
        for (tok, [cv, cn]) in counts {
            let lv = ((cv + smoothing) / denom_v).ln();
            let ln = ((cn + smoothing) / denom_n).ln();
            vocab.push(tok);
            log_odds.push(lv - ln);
        }
        let prior = (docs[0] as f64 / docs[1] as f64).ln();
        Ok(Self::from_parts(vocab, log_odds, prior))
    }

    fn from_parts(vocab: Vec<String>, log_odds: Vec<f64>, prior: f64) -> TokenModel {
        let vocab_id = vocab_id_of(&vocab);
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TokenModel {
            vocab,
            log_odds,
            prior,
            vocab_id,
            index,
        }
    }

    pub fn token_log_odds(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.log_odds[i])
    }

    pub fn score(&self, body: &str) -> f64 {
        self.prior
            + tokenize(body)
                .iter()
                .filter_map(|t| self.token_log_odds(t))
                .sum::<f64>()
    }

    pub fn predict_proba(&self, body: &str) -> f64 {
        let p = 1.0 / (1.0 + (-self.score(body)).exp());
        p.clamp(1e-9, 1.0 - 1e-9)
    }

    /// Per-line sum of positive token log-odds.
    pub fn line_scores(&self, body: &str) -> Vec<f64> {
        body.split('\n')
            .map(|line| {
                tokenize(line)
                    .iter()
                    .filter_map(|t| self.token_log_odds(t))
                    .map(|x| x.max(0.0))
                    .sum()
            })
            .collect()
    }

    /// Log-damped term frequencies over the vocabulary, L2-normalized.
    pub fn embed(&self, body: &str) -> FeatureVector {
        let mut dims = vec![0.0f64; self.vocab.len()];
        for t in tokenize(body) {
            if let Some(&i) = self.index.get(&t) {
                dims[i] += 1.0;
            }
        }
        for d in dims.iter_mut().filter(|d| **d > 0.0) {
            *d = 1.0 + d.ln();
        }
        let norm = dims.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for d in dims.iter_mut() {
                *d /= norm;
            }
        }
        FeatureVector {
            dims,
            vocab_id: self.vocab_id.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TokenModel> {
        let dumped: TokenModel = serde_json::from_slice(&std::fs::read(path)?)?;
        let unique: BTreeSet<&String> = dumped.vocab.iter().collect();
        if unique.len() != dumped.vocab.len() || dumped.log_odds.len() != dumped.vocab.len() {
            return Err(Error::InvalidConfig("model vocabulary is malformed".into()));
        }
        Ok(Self::from_parts(
            dumped.vocab,
            dumped.log_odds,
            dumped.prior,
        ))
    }
}

pub fn fit(train: &[LabeledFunction], smoothing: f64) -> Result<TokenModel> {
    TokenModel::fit(train, smoothing)
}

impl NonVulnScorer for TokenModel {
    fn p_nonvuln(&self, _id: &str, body: &str) -> Result<f64> {
        Ok(1.0 - self.predict_proba(body))
    }
}

impl Embedder for TokenModel {
    fn embed(&self, _id: &str, body: &str) -> Result<FeatureVector> {
        Ok(TokenModel::embed(self, body))
    }
}
