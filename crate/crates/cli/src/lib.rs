//! Experiment runner for the derangement error-suppression lab.
//!
//! Each experiment reads one section of an [`ExperimentConfig`], runs its
//! sweep cells on a rayon pool and returns a [`ResultTable`] plus a JSON
//! summary. Cells are collected in a fixed order, so the CSV only depends on
//! the config and the master seed.

pub mod config;
pub mod experiments;
pub mod native;
pub mod report;
pub mod seeds;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, ExperimentOutput};
pub use seeds::sub_seed;
pub use table::{Cell, ResultTable};
pub use report::{write_outputs, OutputPaths};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
