//! Single-binary front end for the oriented-box pipeline: synthetic data,
//! KITTI ingestion, splitting, training, evaluation, ablation sweeps, and
//! inference timing. Every artifact gets an adjacent `.manifest` recording
//! the command, configuration, seeds, and dataset hashes.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "boxnet",
    version,
    about = "Oriented bounding boxes from bird's-eye-view point clouds"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic labeled dataset.
    GenSynth(commands::GenSynthArgs),
    /// Convert KITTI frames into a cloud file.
    IngestKitti(commands::IngestKittiArgs),
    /// Split a dataset into train and test files.
    Split(commands::SplitArgs),
    /// Train a network and save the best checkpoint.
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint or the L-shape fit on labeled data.
    Eval(commands::EvalArgs),
    /// Train and evaluate every cell of a configuration grid.
    Ablate(commands::AblateArgs),
    /// Time batched inference with a checkpoint.
    Time(commands::TimeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    let run = match cli.cmd {
        Cmd::GenSynth(a) => commands::gen_synth(a, &argv),
        Cmd::IngestKitti(a) => commands::ingest_kitti_cmd(a, &argv),
        Cmd::Split(a) => commands::split(a, &argv),
        Cmd::Train(a) => commands::train_cmd(a, &argv),
        Cmd::Eval(a) => commands::eval(a, &argv),
        Cmd::Ablate(a) => commands::ablate_cmd(a, &argv),
        Cmd::Time(a) => commands::time_cmd(a, &argv),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
