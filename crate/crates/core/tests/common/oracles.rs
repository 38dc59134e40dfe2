//! Brute-force reference implementations of the evaluation metrics.

use std::collections::HashMap;

use latent_sv::eval::{PredictionRecord, ScoredFunction};

pub fn prf(
    preds: &[PredictionRecord],
    labels: &HashMap<String, bool>,
    threshold: f64,
) -> (f64, f64, f64) {
    let predicted: Vec<bool> = preds
        .iter()
        .map(|p| match p.hard_label {
            Some(h) => h,
            None => p.p_vulnerable >= threshold,
        })
        .collect();
    let truth: Vec<bool> = preds.iter().map(|p| labels[&p.id]).collect();
    let tp = predicted
        .iter()
        .zip(&truth)
        .filter(|(p, t)| **p && **t)
        .count() as f64;
    let pp = predicted.iter().filter(|p| **p).count() as f64;
    let ap = truth.iter().filter(|t| **t).count() as f64;
    let p = if pp == 0.0 { 0.0 } else { tp / pp };
    let r = if ap == 0.0 { 0.0 } else { tp / ap };
    let f = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

/// 1-based rank of line `i` (0-based) within one function.
fn rank_in(scores: &[f64], i: usize) -> usize {
    1 + (0..scores.len())
        .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
        .count()
}

fn best_rank(f: &ScoredFunction) -> usize {
    f.vuln_lines
        .iter()
        .map(|&l| rank_in(&f.line_scores, l - 1))
        .min()
        .unwrap()
}

pub fn top10(functions: &[ScoredFunction]) -> f64 {
    let usable: Vec<_> = functions
        .iter()
        .filter(|f| !f.vuln_lines.is_empty())
        .collect();
    usable.iter().filter(|f| best_rank(f) <= 10).count() as f64 / usable.len() as f64
}

pub fn mfr(functions: &[ScoredFunction]) -> f64 {
    let usable: Vec<_> = functions
        .iter()
        .filter(|f| !f.vuln_lines.is_empty())
        .collect();
    usable.iter().map(|f| best_rank(f) as f64).sum::<f64>() / usable.len() as f64
}

/// Pooled ranks: (rank, is_vulnerable) for every line.
fn pooled(functions: &[ScoredFunction]) -> Vec<(usize, bool)> {
    let all: Vec<(f64, &str, usize, bool)> = functions
        .iter()
        .flat_map(|f| {
            f.line_scores
                .iter()
                .enumerate()
                .map(move |(i, &s)| (s, f.id.as_str(), i + 1, f.vuln_lines.contains(&(i + 1))))
        })
        .collect();
    all.iter()
        .map(|a| {
            let ahead = all
                .iter()
                .filter(|b| b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)))
                .count();
            (ahead + 1, a.3)
        })
        .collect()
}

pub fn effort(functions: &[ScoredFunction], target: f64) -> f64 {
    let ranks = pooled(functions);
    let n = ranks.len();
    let total = ranks.iter().filter(|r| r.1).count() as f64;
    if target <= 0.0 {
        return 0.0;
    }
    for k in 1..=n {
        let found = ranks.iter().filter(|r| r.1 && r.0 <= k).count() as f64;
        if found >= target * total {
            return k as f64 / n as f64;
        }
    }
    1.0
}

pub fn recall_at(functions: &[ScoredFunction], budget: f64) -> f64 {
    let ranks = pooled(functions);
    let n = ranks.len();
    let total = ranks.iter().filter(|r| r.1).count() as f64;
    let mut k = 0;
    while (k as f64) < budget * n as f64 - 1e-9 {
        k += 1;
    }
    ranks.iter().filter(|r| r.1 && r.0 <= k).count() as f64 / total
}

/// One-sided P(W+ >= observed) by enumerating all sign patterns.
pub fn wilcoxon_p(pairs: &[(f64, f64)]) -> f64 {
    let d: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|x| *x != 0.0)
        .collect();
    let n = d.len();
    let ranks: Vec<f64> = d
        .iter()
        .map(|x| {
            let less = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}
