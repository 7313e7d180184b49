//! Library side of the `pecho` command-line tool: configuration, dataset
//! I/O and the four subcommands.

pub mod config;
pub mod dataset;
pub mod error;
pub mod fitcmd;
pub mod fitio;
pub mod fitting;
pub mod output;
pub mod plot;
pub mod report;
pub mod simulate;

pub use error::{CliError, CliResult};
