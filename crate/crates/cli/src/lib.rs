//! Command-line front end for `scarid-core`: configuration, file formats and
//! the parallel drivers behind each subcommand.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
