//! `cdfnet` command-line interface.

mod commands;
mod config;
mod error;
mod files;
mod manifest;

use std::io::IsTerminal;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{evaluate, gen, mask, reconstruct, train};
use error::CliError;

/// Complex dense network reconstruction of undersampled MR images.
#[derive(Debug, Parser)]
#[command(name = "cdfnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic complex phantoms.
    GenPhantoms(gen::GenArgs),
    /// Generate a Cartesian undersampling mask.
    MakeMask(mask::MaskArgs),
    /// Train a network on a directory of phantoms.
    Train(train::TrainArgs),
    /// Reconstruct undersampled images with a trained checkpoint.
    Reconstruct(reconstruct::ReconstructArgs),
    /// Score reconstructions against ground truth.
    Evaluate(evaluate::EvaluateArgs),
}

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

pub(crate) fn status(msg: &str) {
    eprintln!("{msg}");
}

fn report_error(err: &CliError) {
    if color_enabled() {
        eprintln!("\x1b[31merror:\x1b[0m {err}");
    } else {
        eprintln!("error: {err}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::GenPhantoms(a) => gen::run(a),
        Command::MakeMask(a) => mask::run(a),
        Command::Train(a) => train::run(a),
        Command::Reconstruct(a) => reconstruct::run(a),
        Command::Evaluate(a) => evaluate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
