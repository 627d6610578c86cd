use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;
use vl_core::perception::{gen_dataset, GlyphConfig, SoftmaxModel};
use vl_core::trainer::{evaluate, EvalMetrics};

use crate::args::{GlyphArgs, ScoreArg, TaskArgs};
use crate::cmd::symmetry::task_group;
use crate::io::{read_dataset, read_json, write_csv};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub glyph: GlyphArgs,
    /// Model JSON written by `train --out-model`.
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluation set (JSON lines); generated from --n and --seed when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ScoreArg::Independent)]
    pub score: ScoreArg,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
}

#[derive(Debug, Serialize)]
struct MetricsRow {
    task: &'static str,
    samples: usize,
    raw_accuracy: f64,
    ttc_accuracy: f64,
    adjusted_accuracy: f64,
    verified_fraction: f64,
    uncorrected_fraction: f64,
    ttc_violations: usize,
    modal_share: f64,
    #[serde(rename = "mean_rank_K")]
    mean_rank_k: f64,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let task = args.task.spec();
    let model: SoftmaxModel = read_json(&args.model)?;
    let dataset = match &args.data {
        Some(p) => read_dataset(p, task)?,
        None => {
            let glyph = GlyphConfig {
                feature_dim: args.glyph.dim.unwrap_or(model.dim),
                noise_sigma: args.glyph.sigma,
                shift_range: args.glyph.shift,
                seed: args.seed,
            };
            gen_dataset(&task, args.n, &glyph)?
        }
    };
    let group = task_group(&task)?;
    let m: EvalMetrics = evaluate(
        &model,
        &dataset,
        group.as_deref(),
        args.score.into(),
        args.budget,
    )?;
    let row = MetricsRow {
        task: task.name(),
        samples: dataset.len(),
        raw_accuracy: m.raw_accuracy,
        ttc_accuracy: m.ttc_accuracy,
        adjusted_accuracy: m.adjusted_accuracy,
        verified_fraction: m.verified_fraction,
        uncorrected_fraction: m.uncorrected_fraction,
        ttc_violations: m.ttc_violations,
        modal_share: m.modal_share,
        mean_rank_k: m.mean_rank_k,
    };
    write_csv(None, &[row])
}
