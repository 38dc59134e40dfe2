//! Manual validation of mined latent vulnerable functions.
//!
//! A seeded sample of candidates, at most one per fixing commit, is loaded
//! into a [`Store`]. Two or more labelers then work through it over HTTP
//! without seeing each other's verdicts. Split verdicts go to a resolution
//! queue. Agreement is reported as Cohen's kappa per labeler pair, and the
//! final verdicts give a false-positive rate broken down by reason.
//!
//! ```no_run
//! # async fn run(items: Vec<latent_sv_triage::TriageItem>) -> latent_sv_triage::Result<()> {
//! use std::sync::Arc;
//! let store = Arc::new(latent_sv_triage::Store::open_or_create("triage-state", || Ok(items))?);
//! latent_sv_triage::serve("127.0.0.1:8080".parse().unwrap(), store, None).await?;
//! # Ok(()) }
//! ```

pub mod agreement;
pub mod api;
pub mod context;
pub mod error;
pub mod model;
pub mod sample;
pub mod store;

pub use agreement::{cohen_kappa, noise_summary, Kappa, NoiseSummary, ReasonShare};
pub use api::{router, serve, ErrorBody, StatusBody};
pub use context::{build_items, diff_excerpt};
pub use error::{Result, TriageError};
pub use model::{ItemContext, Reason, Resolution, Status, TriageItem, TriageLabel, Verdict};
pub use sample::{sample, vfc_key, Sample, DEFAULT_SAMPLE_SIZE};
pub use store::{ItemView, KappaReport, PairKappa, Store};
