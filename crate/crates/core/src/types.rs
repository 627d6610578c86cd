use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to confidences before taking logarithms.
pub const CONFIDENCE_FLOOR: f64 = 1e-12;

const ROW_SUM_TOL: f64 = 1e-9;
const PRIOR_SUM_TOL: f64 = 1e-12;

/// The finite symbol set a task is defined over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::contract("alphabet needs at least two symbols"));
        }
        let distinct: HashSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(Error::contract("alphabet names must be distinct"));
        }
        Ok(Alphabet { names })
    }

    /// Symbols named by their index: "0", "1", ...
    pub fn indexed(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Natural distribution of the symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolPrior {
    probs: Vec<f64>,
}

impl SymbolPrior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::contract("prior must not be empty"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::contract(
                "prior entries must be finite and non-negative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::contract(format!(
                "prior sums to {total}, expected 1"
            )));
        }
        Ok(SymbolPrior { probs })
    }

    pub fn uniform(k: usize) -> Self {
        SymbolPrior {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// Normalized symbol frequencies. Falls back to uniform when every count is zero.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Self::uniform(counts.len());
        }
        SymbolPrior {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A symbol sequence; the decision variable of the constrained search.
///
/// Ordering is lexicographic over symbol indices, which is the tie-break
/// used whenever two assignments share a score.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<usize>);

impl Assignment {
    /// Checked constructor: non-empty and every symbol below `k`.
    pub fn new(symbols: Vec<usize>, k: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::contract("assignment must have length >= 1"));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s >= k) {
            return Err(Error::contract(format!(
                "symbol {bad} outside alphabet of size {k}"
            )));
        }
        Ok(Assignment(symbols))
    }

    pub(crate) fn from_vec(symbols: Vec<usize>) -> Self {
        Assignment(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for Assignment {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Assignment> for Vec<usize> {
    fn from(a: Assignment) -> Self {
        a.0
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Row-major `l x k` matrix of per-position symbol probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ConfidenceGrid {
    /// Builds a row-stochastic grid from nested rows.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let grid = Self::from_rows_unchecked_sum(rows)?;
        for i in 0..grid.rows {
            let sum: f64 = grid.row(i).iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::contract(format!(
                    "row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(grid)
    }

    /// Builds a grid that only has to be rectangular and non-negative.
    pub fn from_rows_unchecked_sum(rows: Vec<Vec<f64>>) -> Result<Self> {
        let l = rows.len();
        if l == 0 {
            return Err(Error::contract("grid needs at least one row"));
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::contract("grid needs at least one column"));
        }
        let mut values = Vec::with_capacity(l * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::contract(format!(
                    "row {i} has {} columns, expected {k}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::contract(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            values.extend(row);
        }
        Ok(ConfidenceGrid {
            rows: l,
            cols: k,
            values,
        })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        ConfidenceGrid { rows, cols, values }
    }

    /// Sequence length `l`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Alphabet size `k`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn is_row_stochastic(&self) -> bool {
        (0..self.rows).all(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs() <= ROW_SUM_TOL)
    }

    /// Per-row argmax; ties go to the lowest index.
    pub fn argmax(&self) -> Assignment {
        let symbols = (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for j in 1..self.cols {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        Assignment(symbols)
    }

    /// Clamped natural log of one entry.
    pub fn log_confidence(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).max(CONFIDENCE_FLOOR).ln()
    }
}
