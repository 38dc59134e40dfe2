//! Noise reduction over mined candidates: latest-introducing-commit (LIC),
//! self-training (ST) and centroid-based removal (CR).
//!
//! Each filter returns an order-preserving subset of its input and marks
//! survivors with the matching [`FilterFlag`]. Boundary cases keep the
//! candidate.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mine::{FilterFlag, LatentCandidate};
use crate::trace::{latest_vic, LineTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dims: Vec<f64>,
    pub vocab_id: String,
}

impl FeatureVector {
    pub fn norm(&self) -> f64 {
        self.dims.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Probability that a function body is not vulnerable.
pub trait NonVulnScorer {
    fn p_nonvuln(&self, id: &str, body: &str) -> Result<f64>;
}

pub trait Embedder {
    fn embed(&self, id: &str, body: &str) -> Result<FeatureVector>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProbabilityRow {
    id: String,
    p_nonvuln: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VectorRow {
    id: String,
    dims: Vec<f64>,
    #[serde(default)]
    vocab_id: Option<String>,
}

/// Precomputed probabilities keyed by candidate id.
#[derive(Debug, Clone, Default)]
pub struct ExternalProbabilities(HashMap<String, f64>);

impl ExternalProbabilities {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let rows: Vec<ProbabilityRow> = crate::jsonl::read(path)?;
        Ok(Self(
            rows.into_iter().map(|r| (r.id, r.p_nonvuln)).collect(),
        ))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self(pairs.into_iter().collect())
    }
}

impl NonVulnScorer for ExternalProbabilities {
    fn p_nonvuln(&self, id: &str, _body: &str) -> Result<f64> {
        self.0
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingScore(id.to_string()))
    }
}

/// Precomputed vectors keyed by id.
#[derive(Debug, Clone, Default)]
pub struct ExternalVectors {
    vocab_id: String,
    vectors: HashMap<String, Vec<f64>>,
}

impl ExternalVectors {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let rows: Vec<VectorRow> = crate::jsonl::read(path)?;
        let vocab_id = rows
            .iter()
            .find_map(|r| r.vocab_id.clone())
            .unwrap_or_else(|| format!("external:{}", path.display()));
        Ok(Self {
            vocab_id,
            vectors: rows.into_iter().map(|r| (r.id, r.dims)).collect(),
        })
    }

    pub fn from_pairs(vocab_id: &str, pairs: impl IntoIterator<Item = (String, Vec<f64>)>) -> Self {
        Self {
            vocab_id: vocab_id.to_string(),
            vectors: pairs.into_iter().collect(),
        }
    }
}

impl Embedder for ExternalVectors {
    fn embed(&self, id: &str, _body: &str) -> Result<FeatureVector> {
        let dims = self
            .vectors
            .get(id)
            .cloned()
            .ok_or_else(|| Error::MissingScore(id.to_string()))?;
        Ok(FeatureVector {
            dims,
            vocab_id: self.vocab_id.clone(),
        })
    }
}

/// Keep candidates from the latest introducing commit onwards.
pub fn filter_lic(
    candidates: &[LatentCandidate],
    traces: &HashMap<String, Vec<LineTrace>>,
) -> Result<Vec<LatentCandidate>> {
    let mut latest = HashMap::new();
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        if !latest.contains_key(&c.origin) {
            let t = traces
                .get(&c.origin)
                .filter(|t| !t.is_empty())
                .ok_or_else(|| Error::MissingTrace(c.origin.clone()))?;
            latest.insert(c.origin.clone(), latest_vic(t)?);
        }
        let vic = &latest[&c.origin];
        if c.interm_commit.author_date >= vic.author_date && c.interm_commit.hash != vic.hash {
            let mut kept = c.clone();
            kept.filter_flags.insert(FilterFlag::LicKeep);
            out.push(kept);
        }
    }
    Ok(out)
}

/// Drop candidates the scorer rates more likely non-vulnerable than not.
pub fn filter_st(
    candidates: &[LatentCandidate],
    scorer: &dyn NonVulnScorer,
) -> Result<Vec<LatentCandidate>> {
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        if scorer.p_nonvuln(&c.id, &c.snapshot.body)? > 0.5 {
            continue;
        }
        let mut kept = c.clone();
        kept.filter_flags.insert(FilterFlag::StKeep);
        out.push(kept);
    }
    Ok(out)
}

pub fn centroid(vectors: &[FeatureVector]) -> Result<FeatureVector> {
    let first = vectors.first().ok_or(Error::EmptyInput("vectors"))?;
    let dim = first.dims.len();
    let mut sum = vec![0.0; dim];
    for v in vectors {
        if v.vocab_id != first.vocab_id {
            return Err(Error::VocabularyMismatch {
                expected: first.vocab_id.clone(),
                got: v.vocab_id.clone(),
            });
        }
        if v.dims.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.dims.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(&v.dims) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(FeatureVector {
        dims: sum.into_iter().map(|s| s / n).collect(),
        vocab_id: first.vocab_id.clone(),
    })
}

/// `1 - cos(x, c)`; `None` when either vector has zero norm.
pub fn cosine_distance(x: &FeatureVector, c: &FeatureVector) -> Result<Option<f64>> {
    if x.dims.len() != c.dims.len() {
        return Err(Error::DimensionMismatch {
            expected: c.dims.len(),
            got: x.dims.len(),
        });
    }
    let (nx, nc) = (x.norm(), c.norm());
    if nx == 0.0 || nc == 0.0 {
        return Ok(None);
    }
    let dot: f64 = x.dims.iter().zip(&c.dims).map(|(a, b)| a * b).sum();
    Ok(Some(1.0 - dot / (nx * nc)))
}

/// Frozen class centroids for CR.
#[derive(Debug, Clone)]
pub struct Centroids {
    pub vulnerable: FeatureVector,
    pub nonvulnerable: FeatureVector,
}

impl Centroids {
    pub fn fit(vuln_train: &[FeatureVector], nonvuln_train: &[FeatureVector]) -> Result<Self> {
        if vuln_train.is_empty() {
            return Err(Error::EmptyClass("vulnerable"));
        }
        if nonvuln_train.is_empty() {
            return Err(Error::EmptyClass("nonvulnerable"));
        }
        let vulnerable = centroid(vuln_train)?;
        let nonvulnerable = centroid(nonvuln_train)?;
        if vulnerable.vocab_id != nonvulnerable.vocab_id {
            return Err(Error::VocabularyMismatch {
                expected: vulnerable.vocab_id,
                got: nonvulnerable.vocab_id,
            });
        }
        Ok(Centroids {
            vulnerable,
            nonvulnerable,
        })
    }

    /// True when the vector is strictly closer to the non-vulnerable centroid.
    pub fn rejects(&self, x: &FeatureVector) -> Result<bool> {
        if x.vocab_id != self.vulnerable.vocab_id {
            return Err(Error::VocabularyMismatch {
                expected: self.vulnerable.vocab_id.clone(),
                got: x.vocab_id.clone(),
            });
        }
        let to_non = cosine_distance(x, &self.nonvulnerable)?;
        let to_vuln = cosine_distance(x, &self.vulnerable)?;
        Ok(match (to_non, to_vuln) {
            (Some(n), Some(v)) => n < v,
            _ => false,
        })
    }
}

/// Drop candidates nearer the non-vulnerable centroid than the vulnerable one.
pub fn filter_cr(
    candidates: &[LatentCandidate],
    embedder: &dyn Embedder,
    centroids: &Centroids,
) -> Result<Vec<LatentCandidate>> {
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        let x = embedder.embed(&c.id, &c.snapshot.body)?;
        if x.norm() == 0.0 {
            log::warn!("{}: zero-norm feature vector; kept", c.id);
        } else if centroids.rejects(&x)? {
            continue;
        }
        let mut kept = c.clone();
        kept.filter_flags.insert(FilterFlag::CrKeep);
        out.push(kept);
    }
    Ok(out)
}
