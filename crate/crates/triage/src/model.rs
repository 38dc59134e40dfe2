use latent_sv::mine::LatentCandidate;
use latent_sv::trace::Hop;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TruePositive,
    FalsePositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    IncorrectLineMapping,
    ChangedCodeContext,
    Other,
    #[serde(rename = "n_a")]
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unlabeled,
    LabeledOne,
    LabeledBoth,
    Disagreement,
    Resolved,
}

/// What a labeler sees next to the candidate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemContext {
    pub original_body: String,
    pub vfc_diff_excerpt: String,
    pub trace_hops: Vec<Hop>,
    pub interm_commit_message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageItem {
    pub item_id: String,
    pub candidate: LatentCandidate,
    pub context: ItemContext,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageLabel {
    /// Client-generated; resubmitting the same id is a no-op.
    #[serde(default)]
    pub label_id: Option<String>,
    pub item_id: String,
    pub labeler_id: String,
    pub verdict: Verdict,
    pub reason: Reason,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub timestamp: u64,
}

impl TriageLabel {
    /// A reason is given exactly for false positives.
    pub fn is_consistent(&self) -> bool {
        (self.reason != Reason::NotApplicable) == (self.verdict == Verdict::FalsePositive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub item_id: String,
    pub verdict: Verdict,
    pub reason: Reason,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub timestamp: u64,
}

pub(crate) fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
