//! Label-free neuro-symbolic learning driven by verification functions.
//!
//! A perception model proposes per-position symbol distributions, a
//! best-first enumerator streams assignments in descending score order, and
//! the first assignment accepted by the task's verifier becomes the
//! pseudo-label used for the next gradient step.
//!
//! Module map:
//!
//! * [`types`] and [`score`]: symbols, assignments, confidence grids and the
//!   total order over assignments.
//! * [`dcs`]: lazy heap enumeration of assignments in score order and the
//!   constrained optimum search built on it.
//! * [`verifiers`]: the addition, sort, match, chess and all-different rules.
//! * [`alignment`]: per-sequence rescaling of predictions toward a prior.
//! * [`symmetry`]: invariance groups of a verifier, orbits and error bounds.
//! * [`perception`]: synthetic glyph data and a softmax classifier.
//! * [`trainer`]: the training loop, test-time correction and evaluation.
//! * [`experiment`]: data generation, training and evaluation in one call.
//! * [`oracle`]: brute-force references used by the differential tests.

pub mod alignment;
pub mod dcs;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod perception;
pub mod score;
pub mod symmetry;
pub mod trainer;
pub mod types;
pub mod verifiers;

pub use error::{Error, Result};
pub use types::{Alphabet, Assignment, ConfidenceGrid, SymbolPrior};
