//! Score functions and the total order over assignments.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Assignment, ConfidenceGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreVariant {
    /// Product of per-position confidences.
    IndependentProduct,
    /// Number of positions agreeing with a reference prediction.
    ConsistencyCount,
    /// Consistency first, confidence product as the tie-breaker.
    LexConsistencyThenProduct,
}

impl ScoreVariant {
    pub fn uses_consistency(self) -> bool {
        !matches!(self, ScoreVariant::IndependentProduct)
    }

    pub fn uses_confidence(self) -> bool {
        !matches!(self, ScoreVariant::ConsistencyCount)
    }
}

/// Ordering rule over assignments of one sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreModel {
    variant: ScoreVariant,
    reference: Option<Assignment>,
}

impl ScoreModel {
    pub fn independent() -> Self {
        ScoreModel {
            variant: ScoreVariant::IndependentProduct,
            reference: None,
        }
    }

    pub fn consistency(reference: Assignment) -> Self {
        ScoreModel {
            variant: ScoreVariant::ConsistencyCount,
            reference: Some(reference),
        }
    }

    pub fn lex(reference: Assignment) -> Self {
        ScoreModel {
            variant: ScoreVariant::LexConsistencyThenProduct,
            reference: Some(reference),
        }
    }

    /// Builds a model of the given variant. Consistency variants need a reference.
    pub fn with_variant(variant: ScoreVariant, reference: Option<Assignment>) -> Result<Self> {
        if variant.uses_consistency() && reference.is_none() {
            return Err(Error::contract(format!(
                "{variant:?} needs a reference prediction"
            )));
        }
        let reference = if variant.uses_consistency() {
            reference
        } else {
            None
        };
        Ok(ScoreModel { variant, reference })
    }

    pub fn variant(&self) -> ScoreVariant {
        self.variant
    }

    pub fn reference(&self) -> Option<&Assignment> {
        self.reference.as_ref()
    }

    /// Checks the model against a grid's shape.
    pub fn validate(&self, grid: &ConfidenceGrid) -> Result<()> {
        if self.variant.uses_consistency() {
            let reference = self.reference.as_ref().ok_or_else(|| {
                Error::contract(format!("{:?} needs a reference prediction", self.variant))
            })?;
            if reference.len() != grid.rows() {
                return Err(Error::contract(format!(
                    "reference length {} does not match grid length {}",
                    reference.len(),
                    grid.rows()
                )));
            }
            if reference.iter().any(|&s| s >= grid.cols()) {
                return Err(Error::contract(
                    "reference symbol outside the grid's alphabet",
                ));
            }
        }
        Ok(())
    }

    /// Per-position contribution of choosing `symbol` at `position`.
    ///
    /// The global key is the componentwise sum of these, so the order they
    /// induce at one position does not depend on the other positions.
    pub(crate) fn position_priority(
        &self,
        grid: &ConfidenceGrid,
        position: usize,
        symbol: usize,
    ) -> ScoreKey {
        let primary = match &self.reference {
            Some(r) if self.variant.uses_consistency() => i64::from(r[position] == symbol),
            _ => 0,
        };
        let secondary_log = if self.variant.uses_confidence() {
            grid.log_confidence(position, symbol)
        } else {
            f64::NEG_INFINITY
        };
        ScoreKey {
            primary,
            secondary_log,
        }
    }
}

/// Total-order key for an assignment. Larger is better.
///
/// `primary` is the consistency count (0 when unused). `secondary_log` is the
/// log of the confidence product, or negative infinity when the model does
/// not use confidences.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScoreKey {
    pub primary: i64,
    pub secondary_log: f64,
}

impl ScoreKey {
    /// Confidence product in linear space (0 when unused).
    pub fn secondary(&self) -> f64 {
        self.secondary_log.exp()
    }
}

impl PartialEq for ScoreKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ScoreKey {}

impl PartialOrd for ScoreKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScoreKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .cmp(&other.primary)
            .then_with(|| self.secondary_log.total_cmp(&other.secondary_log))
    }
}

/// Order in which assignments are ranked: higher key first, then ascending
/// symbol indices. `Ordering::Less` means `a` is ranked before `b`.
///
/// Both the enumerator and the brute-force oracle sort with this function.
pub fn ranking_cmp(a: (&ScoreKey, &Assignment), b: (&ScoreKey, &Assignment)) -> Ordering {
    b.0.cmp(a.0).then_with(|| a.1.cmp(b.1))
}

fn check_lengths(grid: &ConfidenceGrid, a: &Assignment) -> Result<()> {
    if a.len() != grid.rows() {
        return Err(Error::contract(format!(
            "assignment length {} does not match grid length {}",
            a.len(),
            grid.rows()
        )));
    }
    if a.iter().any(|&s| s >= grid.cols()) {
        return Err(Error::contract(
            "assignment symbol outside the grid's alphabet",
        ));
    }
    Ok(())
}

/// Log of the product of per-position confidences, summed in position order.
pub fn log_product_score(grid: &ConfidenceGrid, a: &Assignment) -> Result<f64> {
    check_lengths(grid, a)?;
    Ok(a.iter()
        .enumerate()
        .map(|(i, &s)| grid.log_confidence(i, s))
        .sum())
}

pub fn product_score(grid: &ConfidenceGrid, a: &Assignment) -> Result<f64> {
    log_product_score(grid, a).map(f64::exp)
}

/// Number of positions where `a` agrees with `prediction`.
pub fn consistency_score(a: &Assignment, prediction: &Assignment) -> Result<usize> {
    if a.len() != prediction.len() {
        return Err(Error::contract(format!(
            "lengths differ: {} vs {}",
            a.len(),
            prediction.len()
        )));
    }
    Ok(a.iter()
        .zip(prediction.iter())
        .filter(|(x, y)| x == y)
        .count())
}

pub fn score_key(model: &ScoreModel, grid: &ConfidenceGrid, a: &Assignment) -> Result<ScoreKey> {
    model.validate(grid)?;
    check_lengths(grid, a)?;
    let primary = match model.reference() {
        Some(r) if model.variant().uses_consistency() => consistency_score(a, r)? as i64,
        _ => 0,
    };
    let secondary_log = if model.variant().uses_confidence() {
        log_product_score(grid, a)?
    } else {
        f64::NEG_INFINITY
    };
    Ok(ScoreKey {
        primary,
        secondary_log,
    })
}
