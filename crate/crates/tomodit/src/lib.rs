//! File formats, run manifests and the command pipelines behind the `tomodit`
//! binary.

pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod report;
pub mod state_spec;

pub use error::{CliError, CliResult, ExitStatus};
