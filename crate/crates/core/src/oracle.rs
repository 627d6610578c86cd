//! Brute-force references for the enumerator and the constrained search.
//!
//! Slow on purpose: every assignment is materialized and scored, then sorted
//! with the same [`ranking_cmp`] the enumerator uses.

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::score::{ranking_cmp, score_key, ScoreKey, ScoreModel};
use crate::types::{Assignment, ConfidenceGrid};
use crate::verifiers::Verify;

/// Largest space the oracle will materialize.
pub const MAX_ORACLE_SPACE: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub full_ranking: Vec<(Assignment, ScoreKey)>,
    pub best_feasible: Option<Assignment>,
}

fn space_size(grid: &ConfidenceGrid) -> Result<u64> {
    let k = grid.cols() as u64;
    let mut size: u64 = 1;
    for _ in 0..grid.rows() {
        size = size.saturating_mul(k);
        if size > MAX_ORACLE_SPACE {
            return Err(Error::Capability(format!(
                "{}^{} assignments exceed the oracle limit of {MAX_ORACLE_SPACE}",
                grid.cols(),
                grid.rows()
            )));
        }
    }
    Ok(size)
}

/// Every assignment with its key, best first.
pub fn brute_force_ranking(
    grid: &ConfidenceGrid,
    model: &ScoreModel,
) -> Result<Vec<(Assignment, ScoreKey)>> {
    let size = space_size(grid)?;
    model.validate(grid)?;
    let mut ranking = Vec::with_capacity(size as usize);
    for symbols in (0..grid.rows())
        .map(|_| 0..grid.cols())
        .multi_cartesian_product()
    {
        let a = Assignment::from_vec(symbols);
        let key = score_key(model, grid, &a)?;
        ranking.push((a, key));
    }
    ranking.sort_by(|x, y| ranking_cmp((&x.1, &x.0), (&y.1, &y.0)));
    Ok(ranking)
}

/// Highest-ranked assignment the verifier accepts, if any.
pub fn brute_force_cop<V: Verify + ?Sized>(
    grid: &ConfidenceGrid,
    model: &ScoreModel,
    verifier: &V,
) -> Result<Option<Assignment>> {
    Ok(oracle(grid, model, verifier)?.best_feasible)
}

pub fn oracle<V: Verify + ?Sized>(
    grid: &ConfidenceGrid,
    model: &ScoreModel,
    verifier: &V,
) -> Result<OracleResult> {
    let full_ranking = brute_force_ranking(grid, model)?;
    let mut best: Option<(Assignment, ScoreKey)> = None;
    // Scan the unsorted feasibility set independently of the sort order.
    for (a, key) in &full_ranking {
        if !verifier.verify(a)? {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b, bk)) => ranking_cmp((key, a), (bk, b)).is_lt(),
        };
        if better {
            best = Some((a.clone(), *key));
        }
    }
    Ok(OracleResult {
        full_ranking,
        best_feasible: best.map(|(a, _)| a),
    })
}

/// Row-stochastic `l x k` grid with i.i.d. uniform weights, for differential runs.
pub fn random_grid(l: usize, k: usize, seed: u64) -> Result<ConfidenceGrid> {
    if l == 0 || k == 0 {
        return Err(Error::contract("random grid needs l >= 1 and k >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..l)
        .map(|_| {
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
        .collect();
    ConfidenceGrid::from_rows_unchecked_sum(rows)
}
