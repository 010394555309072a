//! Seeded experiment sweeps over structured credal sets.
//!
//! A run takes an [`ExperimentConfig`], executes its replications in
//! parallel on independent random substreams, and writes a CSV of
//! [`ResultRow`]s plus a JSON summary that embeds the full config and its
//! hash. Row content never depends on thread scheduling.

pub mod config;
pub mod error;
mod experiments;
pub mod rows;
pub mod run;
pub mod summary;

pub use config::{ExperimentConfig, ExperimentKind, Preset};
pub use error::{HarnessError, Result};
pub use experiments::{compute_certificate, log_log_slope};
pub use rows::{Metric, ResultRow};
pub use run::{execute, run, Report};
pub use summary::{summarize, Summary};
