use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use vl_core::dcs::Enumerator;
use vl_core::oracle::{brute_force_ranking, random_grid};
use vl_core::score::{ScoreKey, ScoreModel, ScoreVariant};
use vl_core::{Assignment, ConfidenceGrid};

use crate::args::ScoreArg;
use crate::io::{fmt_assignment, read_json, write_csv};

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Grid as a JSON array of rows, each summing to 1.
    #[arg(long, conflicts_with_all = ["random_l", "random_k"])]
    pub grid: Option<PathBuf>,
    /// Rows of a seeded random grid.
    #[arg(long, requires = "random_k")]
    pub random_l: Option<usize>,
    /// Columns of a seeded random grid.
    #[arg(long, requires = "random_l")]
    pub random_k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ScoreArg::Independent)]
    pub score: ScoreArg,
    /// Comma-separated prediction for the consistency scores; defaults to the argmax.
    #[arg(long, value_delimiter = ',')]
    pub reference: Option<Vec<usize>>,
    /// Rows to print; 0 prints the whole space.
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
    /// Print the brute-force ranking and check it against the enumerator.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Serialize)]
struct RankRow {
    rank: usize,
    assignment: String,
    primary: i64,
    secondary: f64,
}

fn rows(ranking: impl Iterator<Item = (Assignment, ScoreKey)>) -> Vec<RankRow> {
    ranking
        .enumerate()
        .map(|(i, (a, key))| RankRow {
            rank: i + 1,
            assignment: fmt_assignment(&a),
            primary: key.primary,
            secondary: key.secondary(),
        })
        .collect()
}

fn scored(mut e: Enumerator<'_>, limit: usize) -> Vec<(Assignment, ScoreKey)> {
    std::iter::from_fn(|| e.next_scored()).take(limit).collect()
}

pub fn run(args: &EnumerateArgs) -> Result<()> {
    let grid = match (&args.grid, args.random_l, args.random_k) {
        (Some(p), _, _) => ConfidenceGrid::new(read_json::<Vec<Vec<f64>>>(p)?)?,
        (None, Some(l), Some(k)) => random_grid(l, k, args.seed)?,
        _ => bail!("pass --grid FILE or both --random-l and --random-k"),
    };
    let variant: ScoreVariant = args.score.into();
    let reference = match (&args.reference, variant) {
        (_, ScoreVariant::IndependentProduct) => None,
        (Some(r), _) => Some(Assignment::new(r.clone(), grid.cols())?),
        (None, _) => Some(grid.argmax()),
    };
    let model = ScoreModel::with_variant(variant, reference)?;
    let limit = if args.limit == 0 {
        usize::MAX
    } else {
        args.limit
    };

    if args.oracle {
        let expected = brute_force_ranking(&grid, &model)?;
        let actual = scored(Enumerator::new(&grid, &model)?, usize::MAX);
        let mismatches = expected.iter().zip(&actual).filter(|(e, a)| e != a).count()
            + expected.len().abs_diff(actual.len());
        write_csv(None, &rows(expected.into_iter().take(limit)))?;
        if mismatches > 0 {
            bail!("enumerator disagrees with brute force at {mismatches} ranks");
        }
        eprintln!(
            "enumerator matches brute force on all {} assignments",
            actual.len()
        );
    } else {
        write_csv(
            None,
            &rows(scored(Enumerator::new(&grid, &model)?, limit).into_iter()),
        )?;
    }
    Ok(())
}
