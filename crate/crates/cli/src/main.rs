use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod fit;
mod gen;
mod measure;
mod model;
mod output;
mod study;

/// Heavy-tailed Pitman-Yor random measures and mixture models.
#[derive(Parser)]
#[command(name = "pyptail", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tail trajectories of random measures with their envelopes.
    SimulateMeasure(measure::SimulateOpts),
    /// Almost-sure envelope curves in log-survival coordinates.
    Envelopes(measure::MeasureOpts),
    /// A dataset from a simulation scenario.
    GenData(gen::GenOpts),
    /// Posterior fit of a mixture model.
    Fit(fit::FitOpts),
    /// Randomized quantile residuals of a fit.
    Diagnose(fit::DiagnoseOpts),
    /// Repeated generate-and-fit runs over one scenario.
    ReplicateStudy(study::StudyOpts),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SimulateMeasure(o) => measure::cmd_simulate_measure(o),
        Command::Envelopes(o) => measure::cmd_envelopes(o),
        Command::GenData(o) => gen::cmd_gen_data(o),
        Command::Fit(o) => fit::cmd_fit(o),
        Command::Diagnose(o) => fit::cmd_diagnose(o),
        Command::ReplicateStudy(o) => study::cmd_replicate_study(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
