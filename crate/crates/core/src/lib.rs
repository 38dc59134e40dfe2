pub mod dataset;
pub mod error;
pub mod eval;
pub mod extract;
pub mod filter;
pub mod forge;
pub mod jsonl;
pub mod mine;
pub mod pipeline;
pub mod repo;
pub mod surrogate;
pub mod trace;

pub use error::{Error, Result};
