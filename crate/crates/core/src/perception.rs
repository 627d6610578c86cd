//! Synthetic glyph data and a multinomial softmax classifier.
//!
//! Every symbol class owns a block of feature dimensions. A glyph is that
//! block set to 1, circularly shifted by a random offset, plus Gaussian
//! noise. Truth sequences are sampled to satisfy the task's verifier.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Assignment, ConfidenceGrid, SymbolPrior};
use crate::verifiers::{number_to_digits, verify_chess, ChessPositions, Verifier, PIECE_TYPES};

const BOARD_SIZE: i32 = 8;
const MAX_CHESS_RESAMPLES: usize = 10_000;

/// Task family plus the parameters that fix its alphabet and sequence length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSpec {
    /// `digits`-digit operands in base `base`; the result takes `2 * digits` symbols.
    Addition {
        base: usize,
        digits: usize,
    },
    Sort {
        k: usize,
        len: usize,
    },
    Match {
        k: usize,
        len: usize,
    },
    /// `pieces` pieces of six possible types on an 8x8 board.
    Chess {
        pieces: usize,
    },
    AllDifferent {
        k: usize,
        len: usize,
    },
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Addition { .. } => "addition",
            TaskSpec::Sort { .. } => "sort",
            TaskSpec::Match { .. } => "match",
            TaskSpec::Chess { .. } => "chess",
            TaskSpec::AllDifferent { .. } => "alldiff",
        }
    }

    /// Alphabet size `k`.
    pub fn alphabet_size(&self) -> usize {
        match *self {
            TaskSpec::Addition { base, .. } => base,
            TaskSpec::Sort { k, .. }
            | TaskSpec::Match { k, .. }
            | TaskSpec::AllDifferent { k, .. } => k,
            TaskSpec::Chess { .. } => PIECE_TYPES,
        }
    }

    /// Sequence length `l`.
    pub fn seq_len(&self) -> usize {
        match *self {
            TaskSpec::Addition { digits, .. } => 4 * digits,
            TaskSpec::Sort { len, .. }
            | TaskSpec::Match { len, .. }
            | TaskSpec::AllDifferent { len, .. } => len,
            TaskSpec::Chess { pieces } => pieces,
        }
    }

    /// Rejects parameter combinations that admit no valid sequence.
    pub fn validate(&self) -> Result<()> {
        let k = self.alphabet_size();
        let l = self.seq_len();
        if k < 2 {
            return Err(Error::Config(format!(
                "{} needs at least 2 symbols, got {k}",
                self.name()
            )));
        }
        if l == 0 {
            return Err(Error::Config(format!(
                "{} needs a positive sequence length",
                self.name()
            )));
        }
        match *self {
            TaskSpec::Sort { k, len } | TaskSpec::AllDifferent { k, len } if len > k => {
                Err(Error::Infeasible(format!(
                    "no length-{len} sequence of distinct symbols over {k} symbols"
                )))
            }
            TaskSpec::Chess { pieces } if pieces < 2 => Err(Error::Infeasible(
                "a chess board needs at least two pieces for an attack".into(),
            )),
            TaskSpec::Chess { pieces } if pieces > (BOARD_SIZE * BOARD_SIZE) as usize => Err(
                Error::Infeasible(format!("{pieces} pieces do not fit on the board")),
            ),
            _ => Ok(()),
        }
    }

    /// Sequence lengths the symmetry search checks by default.
    pub fn check_lengths(&self) -> Vec<usize> {
        match *self {
            TaskSpec::Addition { digits, .. } => vec![4 * digits],
            TaskSpec::Sort { len, .. }
            | TaskSpec::Match { len, .. }
            | TaskSpec::AllDifferent { len, .. } => (1..=len).collect(),
            TaskSpec::Chess { pieces } => vec![pieces],
        }
    }

    /// The verifier for one sample; chess needs that sample's board positions.
    pub fn verifier(&self, positions: Option<&ChessPositions>) -> Result<Verifier> {
        Ok(match *self {
            TaskSpec::Addition { base, digits } => Verifier::Addition {
                base,
                num_digits: digits,
            },
            TaskSpec::Sort { .. } => Verifier::Sort,
            TaskSpec::Match { .. } => Verifier::Match,
            TaskSpec::AllDifferent { .. } => Verifier::AllDifferent,
            TaskSpec::Chess { pieces } => {
                let positions = positions
                    .ok_or_else(|| Error::Task("chess sample without board positions".into()))?;
                if positions.coords.len() != pieces {
                    return Err(Error::Task(format!(
                        "chess board has {} positions, task expects {pieces}",
                        positions.coords.len()
                    )));
                }
                Verifier::Chess {
                    positions: positions.clone(),
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlyphConfig {
    pub feature_dim: usize,
    pub noise_sigma: f64,
    pub shift_range: usize,
    pub seed: u64,
}

impl GlyphConfig {
    /// Two feature dimensions per class, no shift.
    pub fn for_alphabet(k: usize, noise_sigma: f64, seed: u64) -> Self {
        GlyphConfig {
            feature_dim: 2 * k,
            noise_sigma,
            shift_range: 0,
            seed,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.feature_dim < k {
            return Err(Error::Config(format!(
                "feature dimension {} is smaller than the alphabet size {k}",
                self.feature_dim
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise sigma {} must be >= 0",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Noise-free glyph of `class`: its block of `feature_dim / k` dimensions set to 1.
pub fn glyph_prototype(class: usize, k: usize, feature_dim: usize) -> Vec<f64> {
    let width = feature_dim / k;
    let mut v = vec![0.0; feature_dim];
    v[class * width..(class + 1) * width].fill(1.0);
    v
}

fn render_glyph(class: usize, k: usize, cfg: &GlyphConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = glyph_prototype(class, k, cfg.feature_dim);
    if cfg.shift_range > 0 {
        let span = 2 * cfg.shift_range + 1;
        let shift = rng.random_range(0..span);
        // net rotation in [-shift_range, shift_range]
        v.rotate_right(shift % cfg.feature_dim);
        v.rotate_left(cfg.shift_range % cfg.feature_dim);
    }
    if cfg.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated");
        v.iter_mut().for_each(|x| *x += noise.sample(rng));
    }
    v
}

/// One input sequence. `truth` is held out for evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<Vec<f64>>,
    pub truth: Assignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<ChessPositions>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskSpec,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(task: TaskSpec, samples: Vec<Sample>) -> Result<Self> {
        task.validate()?;
        let (k, l) = (task.alphabet_size(), task.seq_len());
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != l || s.truth.len() != l {
                return Err(Error::Config(format!(
                    "sample {i} does not have length {l}"
                )));
            }
            if s.truth.iter().any(|&t| t >= k) {
                return Err(Error::Config(format!(
                    "sample {i} has a truth symbol outside 0..{k}"
                )));
            }
            task.verifier(s.positions.as_ref())?;
        }
        Ok(Dataset { task, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.samples
            .first()
            .and_then(|s| s.features.first())
            .map(Vec::len)
    }

    pub fn verifier_for(&self, index: usize) -> Result<Verifier> {
        self.task.verifier(self.samples[index].positions.as_ref())
    }

    /// Symbol frequencies of the truth sequences.
    pub fn empirical_prior(&self) -> SymbolPrior {
        let mut counts = vec![0u64; self.task.alphabet_size()];
        for s in &self.samples {
            for &t in s.truth.iter() {
                counts[t] += 1;
            }
        }
        SymbolPrior::from_counts(&counts)
    }
}

fn sample_truth(
    task: &TaskSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Option<ChessPositions>)> {
    Ok(match *task {
        TaskSpec::Addition { base, digits } => {
            let limit = (base as u128).pow(digits as u32);
            let x = rng.random_range(0..limit);
            let y = rng.random_range(0..limit);
            let mut v = number_to_digits(x, digits, base);
            v.extend(number_to_digits(y, digits, base));
            v.extend(number_to_digits(x + y, 2 * digits, base));
            (v, None)
        }
        TaskSpec::Sort { k, len } | TaskSpec::AllDifferent { k, len } => {
            let mut symbols: Vec<usize> = (0..k).collect();
            symbols.shuffle(rng);
            symbols.truncate(len);
            if matches!(task, TaskSpec::Sort { .. }) {
                symbols.sort_unstable();
            }
            (symbols, None)
        }
        TaskSpec::Match { k, len } => {
            let run_counts: Vec<usize> = (1..=len.min(k)).filter(|m| len % m == 0).collect();
            let runs = *run_counts
                .choose(rng)
                .expect("one run always divides the length");
            let mut symbols: Vec<usize> = (0..k).collect();
            symbols.shuffle(rng);
            symbols.truncate(runs);
            symbols.sort_unstable();
            let v = symbols
                .iter()
                .flat_map(|&s| std::iter::repeat_n(s, len / runs))
                .collect();
            (v, None)
        }
        TaskSpec::Chess { pieces } => {
            let mut squares: Vec<(i32, i32)> = (0..BOARD_SIZE)
                .flat_map(|x| (0..BOARD_SIZE).map(move |y| (x, y)))
                .collect();
            for _ in 0..MAX_CHESS_RESAMPLES {
                squares.shuffle(rng);
                let positions = ChessPositions {
                    coords: squares[..pieces].to_vec(),
                };
                let types: Vec<usize> = (0..pieces)
                    .map(|_| rng.random_range(0..PIECE_TYPES))
                    .collect();
                if verify_chess(&types, &positions) {
                    return Ok((types, Some(positions)));
                }
            }
            return Err(Error::Infeasible(format!(
                "no attacking configuration found for {pieces} pieces after {MAX_CHESS_RESAMPLES} draws"
            )));
        }
    })
}

/// `n` samples whose truths satisfy the task's verifier. Sample `i` is drawn
/// from its own stream of the seeded generator, so output is independent of
/// thread count.
pub fn gen_dataset(task: &TaskSpec, n: usize, glyph: &GlyphConfig) -> Result<Dataset> {
    task.validate()?;
    let k = task.alphabet_size();
    glyph.validate(k)?;
    let samples: Result<Vec<Sample>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(glyph.seed);
            rng.set_stream(i as u64);
            let (truth, positions) = sample_truth(task, &mut rng)?;
            let features = truth
                .iter()
                .map(|&c| render_glyph(c, k, glyph, &mut rng))
                .collect();
            Ok(Sample {
                features,
                truth: Assignment::from_vec(truth),
                positions,
            })
        })
        .collect();
    Dataset::new(*task, samples?)
}

/// Linear softmax classifier applied independently at every position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `classes x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub rng_seed: u64,
}

/// Standard deviations of the Gaussian parameter initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitScale {
    pub weight_std: f64,
    pub bias_std: f64,
}

impl Default for InitScale {
    fn default() -> Self {
        InitScale {
            weight_std: 0.1,
            bias_std: 1.0,
        }
    }
}

/// Gradient of the mean cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        SoftmaxModel {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
            rng_seed: 0,
        }
    }

    pub fn random(classes: usize, dim: usize, scale: InitScale, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |std: f64, n: usize| -> Vec<f64> {
            if std > 0.0 {
                let normal = Normal::new(0.0, std).expect("finite std");
                (0..n).map(|_| normal.sample(&mut rng)).collect()
            } else {
                vec![0.0; n]
            }
        };
        let weights = draw(scale.weight_std, classes * dim);
        let bias = draw(scale.bias_std, classes);
        SoftmaxModel {
            classes,
            dim,
            weights,
            bias,
            rng_seed: seed,
        }
    }

    /// Class probabilities for one feature vector.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.classes)
            .map(|c| {
                let w = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter()
            .map(|e| (e / total).max(f64::MIN_POSITIVE))
            .collect()
    }

    fn check_dims(&self, features: &[Vec<f64>]) -> Result<()> {
        if let Some(bad) = features.iter().find(|x| x.len() != self.dim) {
            return Err(Error::contract(format!(
                "feature vector of length {} for a model of dimension {}",
                bad.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Per-position softmax over a sequence of feature vectors.
    pub fn forward(&self, features: &[Vec<f64>]) -> Result<ConfidenceGrid> {
        if features.is_empty() {
            return Err(Error::contract("empty feature sequence"));
        }
        self.check_dims(features)?;
        let values: Vec<f64> = features
            .iter()
            .flat_map(|x| self.probabilities(x))
            .collect();
        Ok(ConfidenceGrid::from_raw(
            features.len(),
            self.classes,
            values,
        ))
    }

    /// Mean cross-entropy over every position of every item.
    pub fn loss(&self, batch: &[(&[Vec<f64>], &Assignment)]) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for (features, labels) in batch {
            self.check_dims(features)?;
            for (x, &y) in features.iter().zip(labels.iter()) {
                total -= self.probabilities(x)[y].ln();
                count += 1;
            }
        }
        Ok(if count == 0 {
            0.0
        } else {
            total / count as f64
        })
    }

    /// Analytic gradient of [`loss`](Self::loss): `(softmax - onehot) x^T`, averaged.
    pub fn gradient(&self, batch: &[(&[Vec<f64>], &Assignment)]) -> Result<Gradient> {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.bias.len()];
        let mut count = 0usize;
        for (features, labels) in batch {
            self.check_dims(features)?;
            if features.len() != labels.len() {
                return Err(Error::contract("labels and features differ in length"));
            }
            for (x, &y) in features.iter().zip(labels.iter()) {
                if y >= self.classes {
                    return Err(Error::contract(format!(
                        "label {y} outside 0..{}",
                        self.classes
                    )));
                }
                let mut p = self.probabilities(x);
                p[y] -= 1.0;
                for (c, &pc) in p.iter().enumerate() {
                    gb[c] += pc;
                    let row = &mut gw[c * self.dim..(c + 1) * self.dim];
                    row.iter_mut().zip(x).for_each(|(g, xi)| *g += pc * xi);
                }
                count += 1;
            }
        }
        if count > 0 {
            let n = count as f64;
            gw.iter_mut().for_each(|g| *g /= n);
            gb.iter_mut().for_each(|g| *g /= n);
        }
        Ok(Gradient {
            weights: gw,
            bias: gb,
        })
    }

    /// One plain gradient-descent step on the mean cross-entropy.
    pub fn grad_step(&mut self, batch: &[(&[Vec<f64>], &Assignment)], lr: f64) -> Result<()> {
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::contract(format!(
                "learning rate {lr} must be positive"
            )));
        }
        let g = self.gradient(batch)?;
        self.weights
            .iter_mut()
            .zip(&g.weights)
            .for_each(|(w, d)| *w -= lr * d);
        self.bias
            .iter_mut()
            .zip(&g.bias)
            .for_each(|(b, d)| *b -= lr * d);
        Ok(())
    }
}
