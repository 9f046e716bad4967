//! Command-line harness: corpora, training, strategy experiments and
//! reports.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod files;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
pub use report::improvement;
