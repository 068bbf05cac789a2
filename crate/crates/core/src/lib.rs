//! Predictive multiplicity for survival models.
//!
//! The crate is organised bottom-up:
//!
//! - [`survival`]: step functions, Kaplan–Meier, Nelson–Aalen and the
//!   risk / survival / cumulative-hazard transforms.
//! - [`forest`]: random survival forests with log-rank family splits.
//! - [`metrics`]: IPCW Brier score, integrated Brier score, Harrell's c-index.
//! - [`rashomon`]: Rashomon sets, prediction cubes and the ambiguity,
//!   discrepancy and obscurity measures with their (ε, δ) sweep.
//! - [`cmapss`]: CMAPSS turbofan ingestion and survival reformulation.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the `parallel`
//! feature disabled every loop runs sequentially and produces the same bytes.

pub mod cmapss;
pub mod error;
pub mod exec;
pub mod forest;
pub mod metrics;
pub mod rashomon;
pub mod survival;

pub use error::{Error, Result};
pub use exec::Execution;
