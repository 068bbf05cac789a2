//! Experiment runner for predictive multiplicity of random survival forests
//! on CMAPSS turbofan data.

pub mod config;
pub mod grid;
pub mod output;
pub mod pipeline;
pub mod report;
