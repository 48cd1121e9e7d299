//! Command-line front end for `rfmnet-core`: rate-profile files, result
//! tables in JSON or CSV, parallel TASEP replicas and subcommand dispatch.

pub mod cli;
pub mod config;
pub mod dispatch;
mod error;
pub mod io;
pub mod parallel;
pub mod report;

pub use config::{Command, OutputFormat, RunConfig};
pub use dispatch::{dispatch, run};
pub use error::CliError;
pub use report::{Report, Table};

/// Version tag carried by every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;
