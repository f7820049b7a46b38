//! Experiment orchestration for the chaoslab numerics: config files,
//! seeded parallel Monte Carlo runs, artifact directories and SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use error::{HarnessError, Result};
pub use experiments::{run, Outcome, Plan, RunArtifact};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CHAOSLAB_THREADS";

/// Builds the global rayon pool from `CHAOSLAB_THREADS` if set.
pub fn configure_threads() -> std::result::Result<(), ConfigError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::field(THREADS_ENV, format!("expected a positive integer, got `{v}`")))?;
    // a second call in the same process is a no-op
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
