//! `vl`: generate data, train and evaluate label-free models, inspect
//! verifier symmetries and the assignment enumerator.

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

mod args;
mod clock;
mod cmd;
mod io;

use clock::Clock;
use cmd::{bench, enumerate, eval, gen_data, symmetry, train};

#[derive(Debug, Parser)]
#[command(
    name = "vl",
    version,
    about = "Learning symbol classifiers from verifiers instead of labels"
)]
struct Cli {
    /// Report zero wall times and no timestamps, so reruns are byte-identical.
    #[arg(long, global = true)]
    no_clock: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as JSON lines.
    GenData(gen_data::GenDataArgs),
    /// Train a classifier from verifier feedback only.
    Train(Box<train::TrainArgs>),
    /// Rerun a recorded training job and compare every number.
    Replay(train::ReplayArgs),
    /// Score a trained model with and without test-time correction.
    Eval(eval::EvalArgs),
    /// Report the symbol permutations a verifier cannot tell apart.
    AnalyzeSymmetry(symmetry::SymmetryArgs),
    /// List assignments of a confidence grid in ranked order.
    Enumerate(enumerate::EnumerateArgs),
    /// Train over a parameter sweep and several seeds.
    Bench(Box<bench::BenchArgs>),
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("VL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("VL_THREADS={raw:?} is not a count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let clock = Clock::new(!cli.no_clock);
    match cli.command {
        Command::GenData(a) => gen_data::run(&a),
        Command::Train(a) => train::run(&a, clock),
        Command::Replay(a) => train::replay(&a),
        Command::Eval(a) => eval::run(&a),
        Command::AnalyzeSymmetry(a) => symmetry::run(&a),
        Command::Enumerate(a) => enumerate::run(&a),
        Command::Bench(a) => bench::run(&a, clock),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use vl_core::Error;
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_) | Error::Task(_) | Error::Infeasible(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
