//! Evaluation of externally produced predictions.

pub mod metrics;
pub mod report;
pub mod stats;

pub use metrics::{
    effort_at_recall, label_map, latent_recall, mfr, prf, recall_at_loc, top10_accuracy,
    PredictionRecord, Prf, RankingMode, ScoredFunction, DEFAULT_THRESHOLD,
};
pub use report::{compare_rounds, evaluate, format_table, summarize, MetricsReport, RunSummary};
pub use stats::{effect_size_r, wilcoxon_signed_rank, EffectSize, WilcoxonResult};
