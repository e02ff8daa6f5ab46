//! `signoise` — fit, verify, and stress-test the signal-plus-noise model of
//! ensemble hindcast skill from the command line.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 convergence
//! failure (artifacts are still written so the failed fit can be inspected).

mod cli;
mod commands;
mod output;

use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    match commands::run(args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
