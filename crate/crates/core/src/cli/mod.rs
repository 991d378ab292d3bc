//! Batch runner behind the `mslab` binary.

pub mod config;
pub mod run;

pub use config::{ExperimentConfig, PairSpec, ResolvedConfig, Suite};
pub use run::{run, write_atomic, Report, RunError, SuiteOutcome};
