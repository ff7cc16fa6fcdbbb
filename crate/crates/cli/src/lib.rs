//! Run synthetic benchmarks or control selection plus robust design on a
//! data file, driven by one TOML config.

pub mod config;
pub mod error;
mod run;

pub use config::{Mode, RunConfig};
pub use error::{CliError, ErrorRecord};
pub use run::{execute, Execution};
