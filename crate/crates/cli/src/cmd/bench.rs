use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use vl_core::perception::TaskSpec;

use crate::args::{RunArgs, Span, TaskArgs};
use crate::clock::Clock;
use crate::cmd::symmetry::task_group;
use crate::io::write_csv;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Fixed task parameters; the swept one is overridden per row.
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Sweep the addition base, e.g. 2..10.
    #[arg(long, conflicts_with_all = ["lens", "pieces_range"])]
    pub bases: Option<Span>,
    /// Sweep the sequence length (sort, match, alldiff).
    #[arg(long, conflicts_with = "pieces_range")]
    pub lens: Option<Span>,
    /// Sweep the number of chess pieces.
    #[arg(long)]
    pub pieces_range: Option<Span>,
    /// Seeds per setting, counted up from --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub task: &'static str,
    pub param: usize,
    pub seed: u64,
    /// Raw symbol accuracy on the held-out set (training set when there is none).
    pub accuracy: f64,
    pub accuracy_ttc: f64,
    /// Mean pseudo-label rank in the final epoch.
    #[serde(rename = "mean_rank_K")]
    pub mean_rank_k: f64,
    /// Verifier calls per training epoch, averaged over epochs.
    pub verifications: f64,
    pub wall_time_s: f64,
}

fn sweep(args: &BenchArgs) -> Result<Vec<(usize, TaskSpec)>> {
    let base = args.task.spec();
    let points: Vec<(usize, TaskSpec)> = match (&args.bases, &args.lens, &args.pieces_range, base) {
        (Some(Span(r)), _, _, TaskSpec::Addition { digits, .. }) => r
            .clone()
            .map(|b| (b, TaskSpec::Addition { base: b, digits }))
            .collect(),
        (_, Some(Span(r)), _, TaskSpec::Sort { k, .. }) => r
            .clone()
            .map(|len| (len, TaskSpec::Sort { k, len }))
            .collect(),
        (_, Some(Span(r)), _, TaskSpec::Match { k, .. }) => r
            .clone()
            .map(|len| (len, TaskSpec::Match { k, len }))
            .collect(),
        (_, Some(Span(r)), _, TaskSpec::AllDifferent { k, .. }) => r
            .clone()
            .map(|len| (len, TaskSpec::AllDifferent { k, len }))
            .collect(),
        (_, _, Some(Span(r)), TaskSpec::Chess { .. }) => r
            .clone()
            .map(|p| (p, TaskSpec::Chess { pieces: p }))
            .collect(),
        (None, None, None, _) => vec![(sweep_param(&base), base)],
        _ => bail!("the swept parameter does not apply to {}", base.name()),
    };
    Ok(points)
}

fn sweep_param(task: &TaskSpec) -> usize {
    match *task {
        TaskSpec::Addition { base, .. } => base,
        TaskSpec::Chess { pieces } => pieces,
        _ => task.seq_len(),
    }
}

pub fn bench_rows(args: &BenchArgs, clock: Clock) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (param, task) in sweep(args)? {
        task.validate()?;
        let group = task_group(&task)?;
        for seed in args.seed..args.seed + args.seeds {
            let cfg = args.run.config(task, seed);
            let started = Instant::now();
            let result = vl_core::experiment::run_experiment(&cfg, group.as_deref())?;
            let wall = clock.since(started);
            let eval = result
                .test_metrics
                .as_ref()
                .unwrap_or(&result.train_metrics);
            let last = result.history.last().expect("at least one epoch");
            let calls: u64 = result.history.iter().map(|s| s.total_verifications).sum();
            let row = BenchRow {
                task: task.name(),
                param,
                seed,
                accuracy: eval.raw_accuracy,
                accuracy_ttc: eval.ttc_accuracy,
                mean_rank_k: last.mean_rank_k,
                verifications: calls as f64 / result.history.len() as f64,
                wall_time_s: wall,
            };
            eprintln!(
                "{} {param} seed {seed}: accuracy {:.4} ttc {:.4} K {:.2}",
                row.task, row.accuracy, row.accuracy_ttc, row.mean_rank_k
            );
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn run(args: &BenchArgs, clock: Clock) -> Result<()> {
    let rows = bench_rows(args, clock)?;
    write_csv(args.out.as_deref(), &rows)
}
