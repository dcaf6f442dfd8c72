//! Command-line front end for `nefkit-core`.
//!
//! Every subcommand writes a canonical table or report: rows come out in a
//! fixed order whatever the thread count, and floats carry 17 significant
//! digits.

// `!(err <= tol)` is deliberate: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io;

use clap::Parser;
use nefkit_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FORMULA_INVALID: u8 = 3;

pub const THREADS_ENV: &str = "NEF_TOOLKIT_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(io::Error),
    /// A check ran to completion and did not pass.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Error::UnknownFamily(_) | Error::InvalidParameter(_)) => EXIT_USAGE,
            CliError::Core(Error::FormulaInvalid { .. }) => EXIT_FORMULA_INVALID,
            CliError::Core(_) | CliError::Io(_) | CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Worker pool sized by `NEF_TOOLKIT_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(raw) = std::env::var_os(THREADS_ENV) {
        let n = raw
            .to_str()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Failed(format!("thread pool: {e}")))
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
