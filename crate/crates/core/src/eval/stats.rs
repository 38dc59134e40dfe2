//! One-sided Wilcoxon signed-rank test and the `r = |Z| / sqrt(N)` effect size.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Non-zero differences.
    pub n: usize,
    /// Standard normal score of `w_plus`, with continuity correction.
    pub z: f64,
    /// One-sided `P(W+ >= w_plus)` under the null.
    pub p_value: f64,
    pub exact: bool,
}

/// Doubled average ranks of `|d|`, so tied ranks stay integral.
fn doubled_ranks(diffs: &[f64]) -> (Vec<u64>, f64) {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // ranks i+1..=j+1, doubled average = i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Test whether `a` tends to exceed `b` across paired observations.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::AllZeroDifferences);
    }
    let n = diffs.len();
    let (ranks, tie_term) = doubled_ranks(&diffs);
    let w2: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_plus = w2 as f64 / 2.0;

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = if var > 0.0 {
        let diff = w_plus - mean;
        let corrected = (diff.abs() - 0.5).max(0.0) * diff.signum();
        corrected / var.sqrt()
    } else {
        0.0
    };

    let exact = n <= EXACT_MAX_N;
    let p_value = if exact {
        exact_upper_tail(&ranks, w2)
    } else {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        1.0 - normal.cdf(z)
    };
    Ok(WilcoxonResult {
        w_plus,
        n,
        z,
        p_value,
        exact,
    })
}

/// `P(W+ >= observed)` by dynamic programming over the 2^n sign assignments.
fn exact_upper_tail(doubled: &[u64], observed: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all: f64 = counts.iter().sum();
    counts[observed as usize..].iter().sum::<f64>() / all
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub r: f64,
    pub non_negligible: bool,
}

pub const NON_NEGLIGIBLE_R: f64 = 0.1;

pub fn effect_size_r(z: f64, n: usize) -> EffectSize {
    assert!(n >= 1, "effect size needs at least one observation");
    let r = z.abs() / (n as f64).sqrt();
    EffectSize {
        r,
        non_negligible: r >= NON_NEGLIGIBLE_R,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_positive_differences() {
        let pairs: Vec<_> = (1..=5).map(|i| (i as f64 + 1.0, 1.0)).collect();
        let w = wilcoxon_signed_rank(&pairs).unwrap();
        assert_eq!(w.w_plus, 15.0);
        assert!((w.p_value - 0.03125).abs() < 1e-12);
        assert!(w.exact);
    }

    #[test]
    fn ties_and_zeros() {
        let w = wilcoxon_signed_rank(&[(1.0, 0.0), (0.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(w.n, 2);
        assert_eq!(w.w_plus, 1.5);
        // sign patterns of two rank-1.5 values: W+ in {0, 1.5, 1.5, 3}
        assert!((w.p_value - 0.75).abs() < 1e-12);
        assert!(matches!(
            wilcoxon_signed_rank(&[(1.0, 1.0)]),
            Err(Error::AllZeroDifferences)
        ));
    }

    #[test]
    fn effect_size_examples() {
        let e = effect_size_r(2.0, 100);
        assert!((e.r - 0.2).abs() < 1e-12);
        assert!(e.non_negligible);
        assert!(!effect_size_r(0.5, 100).non_negligible);
        assert!(effect_size_r(1.0, 100).non_negligible);
    }

    #[test]
    fn large_sample_uses_normal_tail() {
        let pairs: Vec<_> = (0..40).map(|i| (i as f64 + 0.5, 0.0)).collect();
        let w = wilcoxon_signed_rank(&pairs).unwrap();
        assert!(!w.exact);
        assert!(w.p_value < 1e-6);
        assert!(w.z > 0.0);
    }
}
