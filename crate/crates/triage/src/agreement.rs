use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::model::{Reason, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub n: usize,
    /// Chance agreement was 1, so kappa is set by convention.
    pub degenerate: bool,
}

/// Cohen's kappa over two labelers' verdicts on the same items.
pub fn cohen_kappa(a: &BTreeMap<String, Verdict>, b: &BTreeMap<String, Verdict>) -> Result<Kappa> {
    if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
        return Err(TriageError::ItemSetMismatch);
    }
    if a.is_empty() {
        return Err(TriageError::EmptyInput("labels"));
    }
    let n = a.len() as f64;
    let agree = a.iter().filter(|(k, v)| b[*k] == **v).count() as f64;
    let tp = |m: &BTreeMap<String, Verdict>| {
        m.values().filter(|v| **v == Verdict::TruePositive).count() as f64 / n
    };
    let (pa, pb) = (tp(a), tp(b));
    let observed = agree / n;
    let expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    let (kappa, degenerate) = if expected >= 1.0 {
        (if observed >= 1.0 { 1.0 } else { 0.0 }, true)
    } else {
        ((observed - expected) / (1.0 - expected), false)
    };
    Ok(Kappa {
        kappa,
        observed,
        expected,
        n: a.len(),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonShare {
    pub reason: Reason,
    pub count: usize,
    /// Share of all items.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub total: usize,
    pub false_positives: usize,
    pub false_positive_rate: f64,
    pub by_reason: Vec<ReasonShare>,
}

/// False-positive rate overall and per reason over final verdicts.
pub fn noise_summary(finals: &[(Verdict, Reason)]) -> NoiseSummary {
    let total = finals.len();
    let rate = |k: usize| {
        if total == 0 {
            0.0
        } else {
            k as f64 / total as f64
        }
    };
    let fps: Vec<Reason> = finals
        .iter()
        .filter(|(v, _)| *v == Verdict::FalsePositive)
        .map(|(_, r)| *r)
        .collect();
    let by_reason = [
        Reason::IncorrectLineMapping,
        Reason::ChangedCodeContext,
        Reason::Other,
    ]
    .into_iter()
    .map(|reason| {
        let count = fps.iter().filter(|r| **r == reason).count();
        ReasonShare {
            reason,
            count,
            rate: rate(count),
        }
    })
    .collect();
    NoiseSummary {
        total,
        false_positives: fps.len(),
        false_positive_rate: rate(fps.len()),
        by_reason,
    }
}
