//! Benchmark engine for bagged linear ensembles: CSV ingestion, synthetic
//! generators, fold-wise preprocessing, cross-validated runs over base
//! learners and combiners, rank statistics, and report files.

pub mod config;
pub mod dataset;
pub mod engine;
mod error;
pub mod generate;
pub mod preprocess;
pub mod report;
pub mod stats;

pub use config::ExperimentConfig;
pub use engine::{cross_validate, Outcome, RunRecord, Timing};
pub use error::{Error, Result};
