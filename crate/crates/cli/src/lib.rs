//! Library side of the `qcorr` command-line tool.
//!
//! Exit codes: 0 success, 1 failed verification, 2 invalid input (including
//! malformed JSON, reported with line and column), 3 optimizer failure
//! (a partial report is still written). `QCORR_THREADS` bounds the worker
//! pool.

pub mod commands;
pub mod error;
pub mod family;
pub mod io;
pub mod report;
pub mod verify;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
