//! Front end of the `cyclohom` engine: algebra ingestion, computation
//! commands, verification suites and structured reports.
//!
//! [`run`] is the whole program minus process exit, so tests drive it
//! directly.

use std::ffi::OsString;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

pub mod args;
pub mod commands;
pub mod input;
pub mod report;
pub mod suites;

use args::{Cli, Format};
use report::Report;

/// Exit code of usage, input and computation errors.
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
}

macro_rules! compute_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Compute(e.to_string())
            }
        }
    )*};
}

compute_error!(
    cyclohom::periodic::PeriodicError,
    cyclohom::cyclic::CyclicError,
    cyclohom::conjugate::ConjugateError,
    cyclohom::tate::TateError,
    cyclohom::complex::ComplexError
);

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
    pub report: Option<Report>,
}

fn threads(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("CYCLOHOM_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("CYCLOHOM_THREADS={v:?} is not a number"))),
        Err(_) => Ok(0),
    }
}

/// The argument list without the thread count, which does not affect
/// results.
fn echo(argv: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()) {
        if skip {
            skip = false;
        } else if a == "--threads" {
            skip = true;
        } else if !a.starts_with("--threads=") {
            out.push(a);
        }
    }
    out
}

fn failure(e: CliError) -> Outcome {
    Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: EXIT_ERROR, report: None }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { stdout: text, stderr: String::new(), code: 0, report: None }
                }
                _ => Outcome { stdout: String::new(), stderr: text, code: EXIT_ERROR, report: None },
            };
        }
    };
    let n = match threads(cli.common.threads) {
        Ok(n) => n,
        Err(e) => return failure(e),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool,
        Err(e) => return failure(CliError::Usage(format!("thread pool: {e}"))),
    };
    let start = Instant::now();
    let (config, body) = match pool.install(|| commands::execute(&cli)) {
        Ok(x) => x,
        Err(e) => return failure(e),
    };
    let report = Report::new(echo(&argv), config, body, start.elapsed().as_millis() as u64);
    let stdout = match cli.common.format {
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    Outcome { stdout, stderr: String::new(), code: report.status.exit_code(), report: Some(report) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_drops_thread_count() {
        let argv: Vec<OsString> = ["cyclohom", "hh", "--threads", "4", "--p", "5", "--threads=2"].iter().map(Into::into).collect();
        assert_eq!(echo(&argv), vec!["hh", "--p", "5"]);
    }
}
