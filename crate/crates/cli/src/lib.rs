//! File formats and verbs behind the `infomgf` binary.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};
