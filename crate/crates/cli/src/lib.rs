//! Command-line front end for the correlation-engineering simulator:
//! configuration handling, job execution and artifact emission.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{CliError, RunConfig};
