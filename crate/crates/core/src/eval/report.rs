use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{
    effort_at_recall, label_map, mfr, prf, recall_at_loc, top10_accuracy, true_positive_functions,
    PredictionRecord,
};
use super::stats::{effect_size_r, wilcoxon_signed_rank, EffectSize, WilcoxonResult};
use crate::dataset::LabeledFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub top10_acc: Option<f64>,
    pub mfr: Option<f64>,
    pub effort_at_20recall: Option<f64>,
    pub recall_at_1loc: Option<f64>,
    pub n_functions: usize,
    pub n_true_positive: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

pub const METRIC_NAMES: [&str; 7] = [
    "f1",
    "precision",
    "recall",
    "top10_acc",
    "mfr",
    "effort_at_20recall",
    "recall_at_1loc",
];

/// Metrics where a smaller value is better.
pub fn lower_is_better(metric: &str) -> bool {
    matches!(metric, "mfr" | "effort_at_20recall")
}

impl MetricsReport {
    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "f1" => Some(self.f1),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "top10_acc" => self.top10_acc,
            "mfr" => self.mfr,
            "effort_at_20recall" => self.effort_at_20recall,
            "recall_at_1loc" => self.recall_at_1loc,
            _ => None,
        }
    }
}

/// Function-level metrics, plus line-level ones when line scores are present.
pub fn evaluate(
    preds: &[PredictionRecord],
    functions: &[LabeledFunction],
    threshold: f64,
) -> Result<MetricsReport> {
    let m = prf(preds, &label_map(functions), threshold)?;
    let mut report = MetricsReport {
        f1: m.f1,
        precision: m.precision,
        recall: m.recall,
        n_functions: preds.len(),
        n_true_positive: m.tp,
        ..Default::default()
    };
    for (flag, set) in [
        ("precision_undefined", m.precision_undefined),
        ("recall_undefined", m.recall_undefined),
        ("f1_undefined", m.f1_undefined),
    ] {
        if set {
            report.flags.push(flag.to_string());
        }
    }
    let has_lines = preds.iter().any(|p| p.line_scores.is_some());
    if !has_lines {
        return Ok(report);
    }
    let tps = true_positive_functions(preds, functions, threshold)?;
    let opt = |r: Result<f64>, name: &str, flags: &mut Vec<String>| match r {
        Ok(v) => Some(v),
        Err(Error::EmptyInput(_) | Error::NoVulnerableLines) => {
            flags.push(format!("{name}_undefined"));
            None
        }
        Err(e) => {
            flags.push(format!("{name}: {e}"));
            None
        }
    };
    report.top10_acc = opt(top10_accuracy(&tps), "top10_acc", &mut report.flags);
    report.mfr = opt(mfr(&tps), "mfr", &mut report.flags);
    report.effort_at_20recall = opt(
        effort_at_recall(&tps, 0.2),
        "effort_at_20recall",
        &mut report.flags,
    );
    report.recall_at_1loc = opt(
        recall_at_loc(&tps, 0.01),
        "recall_at_1loc",
        &mut report.flags,
    );
    Ok(report)
}

/// Mean and best value of each metric over repeated rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rounds: usize,
    pub mean: BTreeMap<String, f64>,
    /// Best value of each metric on its own.
    pub best: BTreeMap<String, f64>,
    /// All metrics of the round with the highest F1.
    pub best_by_f1: MetricsReport,
}

pub fn summarize(rounds: &[MetricsReport]) -> Result<RunSummary> {
    if rounds.is_empty() {
        return Err(Error::EmptyInput("round reports"));
    }
    let mut mean = BTreeMap::new();
    let mut best = BTreeMap::new();
    for name in METRIC_NAMES {
        let values: Vec<f64> = rounds.iter().filter_map(|r| r.get(name)).collect();
        if values.is_empty() {
            continue;
        }
        mean.insert(
            name.to_string(),
            values.iter().sum::<f64>() / values.len() as f64,
        );
        let pick = if lower_is_better(name) {
            values.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        best.insert(name.to_string(), pick);
    }
    let best_by_f1 = rounds
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.f1.total_cmp(&b.f1).then(j.cmp(i)))
        .map(|(_, r)| r.clone())
        .expect("non-empty");
    Ok(RunSummary {
        rounds: rounds.len(),
        mean,
        best,
        best_by_f1,
    })
}

/// `mean (best)` table with one row per named configuration.
pub fn format_table(rows: &[(String, RunSummary)]) -> String {
    let mut out = String::new();
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let _ = write!(out, "{:width$}", "config");
    for m in METRIC_NAMES {
        let _ = write!(out, "  {m:>20}");
    }
    out.push('\n');
    for (name, s) in rows {
        let _ = write!(out, "{name:width$}");
        for m in METRIC_NAMES {
            let cell = match (s.mean.get(m), s.best.get(m)) {
                (Some(a), Some(b)) => format!("{a:.3} ({b:.3})"),
                _ => "-".to_string(),
            };
            let _ = write!(out, "  {cell:>20}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub metric: String,
    pub test: WilcoxonResult,
    pub effect: EffectSize,
}

/// One-sided test that `treated` improves on `baseline` in `metric`, round by round.
/// For lower-is-better metrics the differences are flipped.
pub fn compare_rounds(
    metric: &str,
    treated: &[MetricsReport],
    baseline: &[MetricsReport],
) -> Result<PairedComparison> {
    if treated.len() != baseline.len() {
        return Err(Error::IdMismatch(format!(
            "{} treated rounds vs {} baseline rounds",
            treated.len(),
            baseline.len()
        )));
    }
    let flip = lower_is_better(metric);
    let mut pairs = Vec::new();
    for (t, b) in treated.iter().zip(baseline) {
        if let (Some(x), Some(y)) = (t.get(metric), b.get(metric)) {
            pairs.push(if flip { (y, x) } else { (x, y) });
        }
    }
    let test = wilcoxon_signed_rank(&pairs)?;
    Ok(PairedComparison {
        metric: metric.to_string(),
        effect: effect_size_r(test.z, pairs.len()),
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(f1: f64, mfr: f64) -> MetricsReport {
        MetricsReport {
            f1,
            mfr: Some(mfr),
            ..Default::default()
        }
    }

    #[test]
    fn summary_direction() {
        let s = summarize(&[rep(0.5, 4.0), rep(0.7, 6.0), rep(0.6, 3.0)]).unwrap();
        assert_eq!(s.best["f1"], 0.7);
        assert_eq!(s.best["mfr"], 3.0);
        assert_eq!(s.best_by_f1.mfr, Some(6.0));
        assert!((s.mean["mfr"] - 13.0 / 3.0).abs() < 1e-12);
        assert!(format_table(&[("x".into(), s)]).contains("0.600 (0.700)"));
    }

    #[test]
    fn comparison_flips_lower_is_better() {
        let treated: Vec<_> = (0..6).map(|i| rep(0.6, 3.0 + i as f64 * 0.01)).collect();
        let base: Vec<_> = (0..6).map(|i| rep(0.5, 5.0 + i as f64 * 0.02)).collect();
        let c = compare_rounds("mfr", &treated, &base).unwrap();
        assert_eq!(c.test.w_plus, 21.0);
        let c = compare_rounds("f1", &treated, &base).unwrap();
        assert!((c.test.p_value - 1.0 / 64.0).abs() < 1e-12);
    }
}
