//! Command-line front end for `urt-core`.
//!
//! Every subcommand prints `key=value` summary lines (12 significant digits)
//! to standard output and writes its full JSON or CSV document to `--out`.
//! Exit codes: 0 on success, including infeasible or uncertified verdicts;
//! 1 on domain, I/O and JSON errors; 2 on usage errors.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use error::{CliError, CliResult};

/// Parses `argv` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Domain(urt_core::Error::NonConvergence { last_iterate, .. }) = &e {
                eprintln!("last iterate: {}", io::nums(last_iterate));
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| commands::execute(&cli.command))
}
