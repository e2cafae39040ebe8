//! Command-line front end: TOML run configs in, reports and CSV out.

pub mod config;
pub mod run;

pub use config::{ConfigError, RunConfig, Task};
pub use run::{provenance, run, Check, Outcome, RunError};
