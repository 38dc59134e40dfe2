use std::collections::HashSet;

use latent_sv::mine::LatentCandidate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TriageError};

pub const DEFAULT_SAMPLE_SIZE: usize = 70;

/// Fixing commit a candidate descends from: the leading field of its origin
/// record id.
pub fn vfc_key(c: &LatentCandidate) -> &str {
    c.origin.split(':').next().unwrap_or(&c.origin)
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub candidates: Vec<LatentCandidate>,
    /// Fewer distinct fixing commits than requested.
    pub short: bool,
}

/// Seeded sample of at most `n` candidates, no two from the same fixing commit.
pub fn sample(candidates: &[LatentCandidate], n: usize, seed: u64) -> Result<Sample> {
    if candidates.is_empty() {
        return Err(TriageError::EmptyInput("candidates"));
    }
    let mut order: Vec<&LatentCandidate> = candidates.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut seen = HashSet::new();
    let picked: Vec<LatentCandidate> = order
        .into_iter()
        .filter(|c| seen.insert(vfc_key(c).to_string()))
        .take(n)
        .cloned()
        .collect();
    let short = picked.len() < n;
    if short {
        log::warn!(
            "only {} distinct fixing commit(s) for a sample of {n}; sampling all",
            picked.len()
        );
    }
    Ok(Sample {
        candidates: picked,
        short,
    })
}
