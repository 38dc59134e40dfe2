//! Function-level and line-level prediction metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub p_vulnerable: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_scores: Option<Vec<f64>>,
    /// Overrides thresholding when the model emits its own decision.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_label: Option<bool>,
}

impl PredictionRecord {
    pub fn predicts_vulnerable(&self, threshold: f64) -> bool {
        self.hard_label.unwrap_or(self.p_vulnerable >= threshold)
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    /// Set when the named quantity had a zero denominator and was reported as 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

/// Precision, recall and F1 over the vulnerable class. `labels` maps id to
/// "is vulnerable" and must cover exactly the predicted ids.
pub fn prf(
    preds: &[PredictionRecord],
    labels: &HashMap<String, bool>,
    threshold: f64,
) -> Result<Prf> {
    if preds.len() != labels.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions for {} labeled functions",
            preds.len(),
            labels.len()
        )));
    }
    let mut m = Prf::default();
    for p in preds {
        let truth = *labels
            .get(&p.id)
            .ok_or_else(|| Error::IdMismatch(p.id.clone()))?;
        match (p.predicts_vulnerable(threshold), truth) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
    }
    let div = |a: usize, b: usize| {
        if b == 0 {
            (0.0, true)
        } else {
            (a as f64 / b as f64, false)
        }
    };
    (m.precision, m.precision_undefined) = div(m.tp, m.tp + m.fp);
    (m.recall, m.recall_undefined) = div(m.tp, m.tp + m.fn_);
    let sum = m.precision + m.recall;
    if sum == 0.0 {
        m.f1_undefined = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / sum;
    }
    Ok(m)
}

pub fn label_map(functions: &[LabeledFunction]) -> HashMap<String, bool> {
    functions
        .iter()
        .map(|f| (f.id.clone(), f.is_vulnerable()))
        .collect()
}

/// A true-positive function with per-line scores and its actual vulnerable lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFunction {
    pub id: String,
    pub line_scores: Vec<f64>,
    /// 1-based line numbers.
    pub vuln_lines: Vec<usize>,
}

/// Line-level inputs: the functions both labeled and predicted vulnerable.
pub fn true_positive_functions(
    preds: &[PredictionRecord],
    functions: &[LabeledFunction],
    threshold: f64,
) -> Result<Vec<ScoredFunction>> {
    let by_id: HashMap<&str, &LabeledFunction> =
        functions.iter().map(|f| (f.id.as_str(), f)).collect();
    let mut out = Vec::new();
    for p in preds {
        let f = by_id
            .get(p.id.as_str())
            .ok_or_else(|| Error::IdMismatch(p.id.clone()))?;
        if !(f.is_vulnerable() && p.predicts_vulnerable(threshold)) {
            continue;
        }
        let scores = p
            .line_scores
            .clone()
            .ok_or_else(|| Error::MissingLineScores(p.id.clone()))?;
        let lines = f.body.split('\n').count();
        if scores.len() != lines {
            return Err(Error::DimensionMismatch {
                expected: lines,
                got: scores.len(),
            });
        }
        out.push(ScoredFunction {
            id: p.id.clone(),
            line_scores: scores,
            vuln_lines: f.vuln_line_nos.clone(),
        });
    }
    Ok(out)
}

/// 1-based line numbers ordered by descending score, ties to the smaller line.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=scores.len()).collect();
    order.sort_by(|&a, &b| scores[b - 1].total_cmp(&scores[a - 1]).then(a.cmp(&b)));
    order
}

fn best_rank(f: &ScoredFunction) -> Option<usize> {
    ranking(&f.line_scores)
        .iter()
        .position(|l| f.vuln_lines.contains(l))
        .map(|p| p + 1)
}

fn localizable(functions: &[ScoredFunction]) -> Result<Vec<&ScoredFunction>> {
    let usable: Vec<_> = functions
        .iter()
        .filter(|f| !f.vuln_lines.is_empty())
        .collect();
    if usable.is_empty() {
        return Err(Error::EmptyInput(
            "true-positive functions with vulnerable lines",
        ));
    }
    Ok(usable)
}

/// Share of functions with an actual vulnerable line among their 10 top-scored lines.
pub fn top10_accuracy(functions: &[ScoredFunction]) -> Result<f64> {
    let usable = localizable(functions)?;
    let hits = usable
        .iter()
        .filter(|f| best_rank(f).is_some_and(|r| r <= 10))
        .count();
    Ok(hits as f64 / usable.len() as f64)
}

/// Mean rank of each function's best-ranked actual vulnerable line.
pub fn mfr(functions: &[ScoredFunction]) -> Result<f64> {
    let usable = localizable(functions)?;
    let mut total = 0usize;
    for f in &usable {
        total += best_rank(f).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "{}: vulnerable line outside the scored lines",
                f.id
            ))
        })?;
    }
    Ok(total as f64 / usable.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    /// One ranking over every line of every function.
    #[default]
    Pooled,
    /// Rank within each function and average the per-function values.
    PerFunction,
}

/// Every line as (is vulnerable), in pooled inspection order.
fn pooled(functions: &[&ScoredFunction]) -> Vec<bool> {
    let mut lines: Vec<(f64, &str, usize, bool)> = Vec::new();
    for f in functions {
        for (i, &s) in f.line_scores.iter().enumerate() {
            lines.push((s, f.id.as_str(), i + 1, f.vuln_lines.contains(&(i + 1))));
        }
    }
    lines.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
    lines.into_iter().map(|l| l.3).collect()
}

fn effort_on(order: &[bool], target: f64) -> Result<f64> {
    let total = order.iter().filter(|&&v| v).count();
    if total == 0 {
        return Err(Error::NoVulnerableLines);
    }
    if target <= 0.0 {
        return Ok(0.0);
    }
    let needed = target * total as f64;
    let mut found = 0usize;
    for (i, &v) in order.iter().enumerate() {
        found += usize::from(v);
        if found as f64 >= needed {
            return Ok((i + 1) as f64 / order.len() as f64);
        }
    }
    Ok(1.0)
}

fn recall_on(order: &[bool], budget: f64) -> Result<f64> {
    let total = order.iter().filter(|&&v| v).count();
    if total == 0 {
        return Err(Error::NoVulnerableLines);
    }
    let k = ((budget * order.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let found = order[..k.min(order.len())].iter().filter(|&&v| v).count();
    Ok(found as f64 / total as f64)
}

fn per_function(functions: &[ScoredFunction], f: impl Fn(&[bool]) -> Result<f64>) -> Result<f64> {
    let usable = localizable(functions)?;
    let mut sum = 0.0;
    for func in &usable {
        sum += f(&pooled(&[*func]))?;
    }
    Ok(sum / usable.len() as f64)
}

/// Fraction of lines inspected, in score order, to reach `target` of all vulnerable lines.
pub fn effort_at_recall(functions: &[ScoredFunction], target: f64) -> Result<f64> {
    effort_at_recall_with(functions, target, RankingMode::Pooled)
}

pub fn effort_at_recall_with(
    functions: &[ScoredFunction],
    target: f64,
    mode: RankingMode,
) -> Result<f64> {
    match mode {
        RankingMode::Pooled => {
            let all: Vec<&ScoredFunction> = functions.iter().collect();
            effort_on(&pooled(&all), target)
        }
        RankingMode::PerFunction => per_function(functions, |o| effort_on(o, target)),
    }
}

/// Fraction of vulnerable lines found in the top `ceil(budget * lines)` ranked lines.
pub fn recall_at_loc(functions: &[ScoredFunction], budget: f64) -> Result<f64> {
    recall_at_loc_with(functions, budget, RankingMode::Pooled)
}

pub fn recall_at_loc_with(
    functions: &[ScoredFunction],
    budget: f64,
    mode: RankingMode,
) -> Result<f64> {
    match mode {
        RankingMode::Pooled => {
            let all: Vec<&ScoredFunction> = functions.iter().collect();
            recall_on(&pooled(&all), budget)
        }
        RankingMode::PerFunction => per_function(functions, |o| recall_on(o, budget)),
    }
}

/// Share of held-out latent functions the model predicts vulnerable.
pub fn latent_recall(preds: &[PredictionRecord], threshold: f64) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("latent predictions"));
    }
    let hits = preds
        .iter()
        .filter(|p| p.predicts_vulnerable(threshold))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}
