mod analyze;
mod calibrate;
mod cli;
mod output;
mod pipeline;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use herdsim_core::Result;

use cli::{AnalyzeCommand, CalibrateCommand, Cli, Command};

fn out_dir(explicit: &Option<PathBuf>, root: &Path, name: impl AsRef<Path>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| root.join(name))
}

fn dispatch(cli: Cli) -> Result<()> {
    let root = &cli.out_root;
    match &cli.command {
        Command::Calibrate(CalibrateCommand::Asymmetry(a)) => {
            calibrate::asymmetry(a, &out_dir(&a.out, root, "calibrate-asymmetry")).map(drop)
        }
        Command::Calibrate(CalibrateCommand::Comovement(a)) => {
            calibrate::comovement_cmd(a, &out_dir(&a.out, root, "calibrate-comovement")).map(drop)
        }
        Command::Calibrate(CalibrateCommand::Infoforce(a)) => {
            calibrate::infoforce(a, &out_dir(&a.out, root, "calibrate-infoforce")).map(drop)
        }
        Command::Simulate(a) => {
            let name = match (a.ensemble, a.seed) {
                (Some(k), seed) => format!("simulate-{}-ensemble{k}-seed{}", a.model, seed.unwrap_or(0)),
                (None, Some(seed)) => format!("simulate-{}-seed{seed}", a.model),
                (None, None) => format!("simulate-{}", a.model),
            };
            simulate::simulate(&a.into(), &out_dir(&a.out, root, name)).map(drop)
        }
        Command::Analyze(AnalyzeCommand::Stats(a)) => analyze::stats(
            &analyze::SeriesRequest::from_args(a, analyze::STATS_MAX_LAG),
            &out_dir(&a.out, root, "analyze-stats"),
        ),
        Command::Analyze(AnalyzeCommand::Lcurve(a)) => analyze::lcurve(
            &analyze::SeriesRequest::from_args(a, analyze::LCURVE_MAX_LAG),
            &out_dir(&a.out, root, "analyze-lcurve"),
        ),
        Command::Analyze(AnalyzeCommand::Spectrum(a)) => {
            analyze::spectrum(a, &out_dir(&a.out, root, "analyze-spectrum"))
        }
        Command::Pipeline(a) => {
            let stem = a.file.file_stem().map_or("pipeline".into(), |s| s.to_string_lossy().into_owned());
            pipeline::run_pipeline(&a.file, &out_dir(&a.out, root, stem))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("herdsim: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
