//! Per-sequence distribution alignment.
//!
//! Each symbol's column of the grid is rescaled so its total mass over the
//! `l` positions equals `l * P_j`:
//!
//! ```text
//! g'[i][j] = l * P[j] * g[i][j] / sum_m g[m][j]
//! ```
//!
//! Rows are then optionally renormalized and the result is blended with the
//! original grid by the annealing weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ConfidenceGrid, SymbolPrior, CONFIDENCE_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentConfig {
    pub prior: SymbolPrior,
    /// 1 applies full alignment, 0 returns the input unchanged.
    pub anneal: f64,
    pub row_renormalize: bool,
}

impl AlignmentConfig {
    pub fn new(prior: SymbolPrior) -> Self {
        AlignmentConfig {
            prior,
            anneal: 1.0,
            row_renormalize: true,
        }
    }

    pub fn with_anneal(mut self, anneal: f64) -> Self {
        self.anneal = anneal;
        self
    }

    /// Keep the raw rescaled values, without row renormalization.
    pub fn raw(mut self) -> Self {
        self.row_renormalize = false;
        self
    }
}

pub fn align(grid: &ConfidenceGrid, cfg: &AlignmentConfig) -> Result<ConfidenceGrid> {
    let (l, k) = (grid.rows(), grid.cols());
    if cfg.prior.len() != k {
        return Err(Error::contract(format!(
            "prior has {} symbols, grid has {k}",
            cfg.prior.len()
        )));
    }
    if !(0.0..=1.0).contains(&cfg.anneal) {
        return Err(Error::contract(format!(
            "anneal weight {} outside [0, 1]",
            cfg.anneal
        )));
    }
    if cfg.anneal == 0.0 {
        return Ok(grid.clone());
    }

    let scale: Vec<f64> = (0..k)
        .map(|j| l as f64 * cfg.prior.probs()[j] / grid.column_sum(j).max(CONFIDENCE_FLOOR))
        .collect();
    let mut aligned: Vec<f64> = grid
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &g)| g * scale[idx % k])
        .collect();

    if cfg.row_renormalize {
        for (i, row) in aligned.chunks_mut(k).enumerate() {
            let sum: f64 = row.iter().sum();
            if sum > CONFIDENCE_FLOOR {
                row.iter_mut().for_each(|v| *v /= sum);
            } else {
                // all mass sat on symbols with zero prior
                row.copy_from_slice(grid.row(i));
            }
        }
    }

    if cfg.anneal < 1.0 {
        let w = cfg.anneal;
        for (a, &g) in aligned.iter_mut().zip(grid.values()) {
            *a = w * *a + (1.0 - w) * g;
        }
    }
    Ok(ConfidenceGrid::from_raw(l, k, aligned))
}

/// Linear decay from 1 to 0 over the first `ceil(total_epochs / 2)` epochs.
pub fn anneal_schedule(epoch: usize, total_epochs: usize) -> f64 {
    anneal_over(epoch, total_epochs.div_ceil(2))
}

/// Linear decay from 1 to 0 over `decay_epochs` epochs, then 0.
pub fn anneal_over(epoch: usize, decay_epochs: usize) -> f64 {
    if epoch >= decay_epochs {
        0.0
    } else {
        1.0 - epoch as f64 / decay_epochs as f64
    }
}
