use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use vl_core::perception::{gen_dataset, GlyphConfig};

use crate::args::{GlyphArgs, TaskArgs};
use crate::io::{dataset_to_jsonl, sink};

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub glyph: GlyphArgs,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON-lines output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &GenDataArgs) -> Result<()> {
    let task = args.task.spec();
    let glyph = GlyphConfig {
        feature_dim: args.glyph.dim.unwrap_or(2 * task.alphabet_size()),
        noise_sigma: args.glyph.sigma,
        shift_range: args.glyph.shift,
        seed: args.seed,
    };
    let dataset = gen_dataset(&task, args.n, &glyph)?;
    let mut w = sink(args.out.as_deref())?;
    w.write_all(&dataset_to_jsonl(&dataset)?)?;
    w.flush()?;
    eprintln!("wrote {} {} sequences", dataset.len(), task.name());
    Ok(())
}
