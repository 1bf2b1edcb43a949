//! `pvf` — capacity-aware metrics and perturbation-based model selection.

mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "pvf",
    version,
    about = "Intervention-efficiency metrics and perturbation-based model selection",
    long_about = "Compute capacity-aware intervention-efficiency scores, validate them by Monte \
                  Carlo simulation, select robust models on perturbed validation sets, and run \
                  the synthetic and real-data selection studies."
)]
struct Cli {
    /// Worker threads for parallel commands (0 = one per core). Output is
    /// identical for every value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute intervention efficiency from confusion counts or a predictions file.
    Ie(commands::IeArgs),
    /// Monte Carlo validation of the closed form over a population grid (CSV).
    Oracle(commands::OracleArgs),
    /// Run perturbation-based and traditional selection on a dataset.
    Select(commands::SelectArgs),
    /// Synthetic model-selection sweep.
    Synth(commands::SynthArgs),
    /// Real-data model-selection protocol.
    Real(commands::RealArgs),
    /// Regenerate sensitivity tables and plots from result CSVs.
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Bad flags and malformed invocations are validation errors.
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    let run = || match cli.command {
        Command::Ie(args) => commands::run_ie(args),
        Command::Oracle(args) => commands::run_oracle(args),
        Command::Select(args) => commands::run_select(args),
        Command::Synth(args) => commands::run_synth(args),
        Command::Real(args) => commands::run_real(args),
        Command::Report(args) => commands::run_report(args),
    };

    let result = if cli.jobs > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        run()
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err
                .downcast_ref::<pvf_core::Error>()
                .map(pvf_core::Error::is_validation)
                .unwrap_or(false);
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}
