//! Command-line toolkit around [`tvtrend_core`]: file formats, parallel
//! Monte-Carlo runs, verification suites and the `tvtrend` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod verify;

pub use error::{CliError, Result};
