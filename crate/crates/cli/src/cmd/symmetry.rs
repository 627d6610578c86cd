use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use vl_core::perception::{gen_dataset, GlyphConfig, TaskSpec};
use vl_core::symmetry::{orbit_report, symmetry_group, Permutation};
use vl_core::{Error, SymbolPrior};

use crate::args::{PriorArg, TaskArgs};
use crate::io::write_json;

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    /// Comma-separated sequence lengths to check; defaults depend on the task.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = PriorArg::Uniform)]
    pub prior: PriorArg,
    /// Sequences drawn to estimate an empirical prior.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Seeds the chess board and the empirical prior sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &SymmetryArgs) -> Result<()> {
    let task = args.task.spec();
    task.validate()?;
    let k = task.alphabet_size();
    let lengths = args.lengths.clone().unwrap_or_else(|| task.check_lengths());
    let needs_sample = matches!(task, TaskSpec::Chess { .. }) || args.prior == PriorArg::Empirical;
    let sample = if needs_sample {
        let n = if args.prior == PriorArg::Empirical {
            args.n.max(1)
        } else {
            1
        };
        Some(gen_dataset(
            &task,
            n,
            &GlyphConfig::for_alphabet(k, 0.0, args.seed),
        )?)
    } else {
        None
    };
    let prior = match (&sample, args.prior) {
        (Some(d), PriorArg::Empirical) => d.empirical_prior(),
        _ => SymbolPrior::uniform(k),
    };
    // chess is analyzed on one seeded board
    let positions = sample.as_ref().and_then(|d| d.samples[0].positions.clone());
    let verifier = task.verifier(positions.as_ref())?;
    let report = orbit_report(&verifier, k, &lengths, &prior).context("symmetry analysis")?;
    eprintln!(
        "{}: {} symmetries, {} orbits, r_up={} r_avg={}",
        task.name(),
        report.group.len(),
        report.orbits.len(),
        report.r_up,
        report.r_avg
    );
    write_json(args.out.as_deref(), &report)
}

/// Invariance group used for adjusted accuracy, or `None` (identity only)
/// when the task is too large for the exhaustive search or varies per sample.
pub fn task_group(task: &TaskSpec) -> Result<Option<Vec<Permutation>>> {
    if matches!(task, TaskSpec::Chess { .. }) {
        return Ok(None);
    }
    let verifier = task.verifier(None)?;
    match symmetry_group(&verifier, task.alphabet_size(), &task.check_lengths()) {
        Ok(g) => Ok(Some(g)),
        Err(Error::Capability(why)) => {
            eprintln!("adjusted accuracy uses the identity only: {why}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}
