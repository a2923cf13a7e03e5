//! Command implementations behind the `strainamp` binary.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::{RunConfig, SweepConfig};
pub use error::{CliError, Result};
