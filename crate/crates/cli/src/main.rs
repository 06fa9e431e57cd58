//! `boundfdr` command-line tool.
//!
//! Exit codes: 0 on success, 2 on invalid input or arguments, 3 when
//! `--strict-ties` is set and the scores contain ties.

mod detect;
mod input;
mod lfdr;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "boundfdr",
    version,
    about = "Conformal novelty detection with boundary FDR control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one procedure on calibration and test score files and write a JSON report.
    Detect(detect::DetectArgs),
    /// Estimate bFDR / FDR on synthetic data described by a JSON config.
    Simulate(simulate::SimulateArgs),
    /// Export the local-fdr curves of a sample as CSV.
    Lfdr(lfdr::LfdrArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let ties = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<boundfdr::Error>(),
            Some(boundfdr::Error::Ties(_))
        )
    });
    if ties {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Detect(args) => detect::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Lfdr(args) => lfdr::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
