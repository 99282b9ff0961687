//! Command-line front end of the `dogfuse` fusion library.
//!
//! Every command is available as a function returning a typed outcome so the
//! binary stays a thin printing layer and tests can run commands in process.

pub mod args;
pub mod commands;
pub mod error;
pub mod inputs;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult, Status};

/// Run a parsed command line, printing results to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(CliError::usage(anyhow::anyhow!(
                    "--threads must be at least 1"
                )));
            }
            builder = builder.num_threads(n);
        }
        builder.build().map_err(CliError::internal)?
    };
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let print_err = |e: std::io::Error| CliError::output(e, "stdout");
    match command {
        Command::Fuse(args) => {
            let outcome = commands::fuse::run(&args)?;
            write!(out, "{outcome}").map_err(print_err)?;
        }
        Command::Sweep(args) => {
            let outcome = commands::sweep::run(&args)?;
            writeln!(
                out,
                "{} grid cells written to {}, scores in {}",
                outcome.rows.len(),
                args.out_dir.display(),
                outcome.csv.display()
            )
            .map_err(print_err)?;
        }
        Command::Bench(args) => {
            let report = commands::bench::run(&args)?;
            let text = serde_json::to_string_pretty(&report).map_err(CliError::internal)?;
            match &args.output {
                Some(path) => {
                    std::fs::write(path, text + "\n")
                        .map_err(|e| CliError::output(e, path.display()))?;
                    writeln!(
                        out,
                        "mean total {:.4} s over {} runs ({} threads) -> {}",
                        report.total.mean_s,
                        report.reps,
                        report.threads,
                        path.display()
                    )
                    .map_err(print_err)?;
                }
                None => writeln!(out, "{text}").map_err(print_err)?,
            }
        }
        Command::Eval(args) => {
            let report = commands::eval::run(&args)?;
            if args.csv.is_none() {
                commands::eval::write_csv(&report.rows(), &mut out)
                    .map_err(|e| CliError::output(e, "stdout"))?;
            }
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and run; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> Status
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Status::Usage
            } else {
                Status::Ok
            };
        }
    };
    match run(cli) {
        Ok(()) => Status::Ok,
        Err(e) => {
            eprintln!("error: {e}");
            e.status
        }
    }
}
