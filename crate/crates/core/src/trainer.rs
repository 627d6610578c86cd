//! The label-free training loop, test-time correction and evaluation.
//!
//! One training step: predict a confidence grid per sequence, align it to
//! the prior, search for the best assignment the verifier accepts, and take
//! a gradient step toward those pseudo-labels. Items of a batch are solved in
//! parallel; results are collected in batch order so runs are reproducible
//! regardless of thread count.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{align, anneal_over, AlignmentConfig};
use crate::dcs::{solve_cop, CopOutcome};
use crate::error::{Error, Result};
use crate::perception::{Dataset, SoftmaxModel};
use crate::score::{ScoreModel, ScoreVariant};
use crate::symmetry::{min_perm_empirical_error, Permutation};
use crate::types::{Assignment, ConfidenceGrid, SymbolPrior};
use crate::verifiers::Verify;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignSettings {
    pub prior: SymbolPrior,
    pub row_renormalize: bool,
    /// Epochs over which the alignment weight decays linearly from 1 to 0.
    pub decay_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// `None` disables alignment.
    pub align: Option<AlignSettings>,
    pub score: ScoreVariant,
    /// Maximum verifier calls per sequence.
    pub budget: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if self.budget == 0 {
            return Err(Error::Config("search budget must be >= 1".into()));
        }
        Ok(())
    }

    /// Alignment weight for `epoch`, or `None` when alignment is off.
    pub fn alignment_for_epoch(&self, epoch: usize) -> Option<AlignmentConfig> {
        self.align.as_ref().map(|a| AlignmentConfig {
            prior: a.prior.clone(),
            anneal: anneal_over(epoch, a.decay_epochs),
            row_renormalize: a.row_renormalize,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean 1-based rank of the pseudo-label; exhausted searches count their verifier calls.
    pub mean_rank_k: f64,
    pub mean_verifications: f64,
    pub total_verifications: u64,
    pub fraction_exhausted: f64,
    pub pseudo_label_accuracy: f64,
    pub symbol_accuracy: f64,
    pub adjusted_accuracy: f64,
    pub wall_time_s: f64,
}

/// Score model for one sequence; consistency variants reference the grid's argmax.
pub fn score_model_for(variant: ScoreVariant, grid: &ConfidenceGrid) -> ScoreModel {
    match variant {
        ScoreVariant::IndependentProduct => ScoreModel::independent(),
        ScoreVariant::ConsistencyCount => ScoreModel::consistency(grid.argmax()),
        ScoreVariant::LexConsistencyThenProduct => ScoreModel::lex(grid.argmax()),
    }
}

fn check_compatible(model: &SoftmaxModel, dataset: &Dataset) -> Result<()> {
    let k = dataset.task.alphabet_size();
    if model.classes != k {
        return Err(Error::Config(format!(
            "model has {} classes, task {} has {k} symbols",
            model.classes,
            dataset.task.name()
        )));
    }
    if let Some(d) = dataset.feature_dim() {
        if d != model.dim {
            return Err(Error::Config(format!(
                "model dimension {} but features have {d}",
                model.dim
            )));
        }
    }
    for i in 0..dataset.len() {
        dataset
            .verifier_for(i)
            .map_err(|e| Error::Config(format!("sample {i}: {e}")))?;
    }
    Ok(())
}

fn symbol_accuracy(preds: &[Assignment], truths: &[&Assignment]) -> f64 {
    let (hits, total) = preds
        .iter()
        .zip(truths)
        .fold((0usize, 0usize), |(h, t), (p, y)| {
            (
                h + p.iter().zip(y.iter()).filter(|(a, b)| a == b).count(),
                t + p.len(),
            )
        });
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Raw argmax predictions for every sample.
pub fn predict_all(model: &SoftmaxModel, dataset: &Dataset) -> Result<Vec<Assignment>> {
    dataset
        .samples
        .par_iter()
        .map(|s| model.forward(&s.features).map(|g| g.argmax()))
        .collect()
}

fn adjusted_accuracy(
    preds: &[Assignment],
    dataset: &Dataset,
    group: Option<&[Permutation]>,
) -> Result<f64> {
    let identity = [Permutation::identity(dataset.task.alphabet_size())];
    let group = group.unwrap_or(&identity);
    let truths: Vec<Assignment> = dataset.samples.iter().map(|s| s.truth.clone()).collect();
    Ok(1.0 - min_perm_empirical_error(preds, &truths, group)?)
}

/// Runs `cfg.epochs` epochs of pseudo-label training.
///
/// `group` is the verifier's invariance group used for the adjusted
/// accuracy; `None` means identity only.
pub fn train(
    mut model: SoftmaxModel,
    dataset: &Dataset,
    cfg: &TrainConfig,
    group: Option<&[Permutation]>,
) -> Result<(SoftmaxModel, Vec<EpochStats>)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    check_compatible(&model, dataset)?;
    if let Some(a) = &cfg.align {
        if a.prior.len() != dataset.task.alphabet_size() {
            return Err(Error::Config(
                "prior size does not match the alphabet".into(),
            ));
        }
    }
    let verifiers = (0..dataset.len())
        .map(|i| dataset.verifier_for(i))
        .collect::<Result<Vec<_>>>()?;
    let truths: Vec<&Assignment> = dataset.samples.iter().map(|s| &s.truth).collect();

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let alignment = cfg.alignment_for_epoch(epoch);
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut rank_sum = 0u64;
        let mut verifications = 0u64;
        let mut exhausted = 0usize;
        let mut pseudo_hits = 0usize;
        let mut symbols = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            let outcomes: Vec<CopOutcome> = batch
                .par_iter()
                .map(|&i| {
                    let grid = model.forward(&dataset.samples[i].features)?;
                    let grid = match &alignment {
                        Some(a) => align(&grid, a)?,
                        None => grid,
                    };
                    let score = score_model_for(cfg.score, &grid);
                    solve_cop(&grid, &score, &verifiers[i], cfg.budget)
                })
                .collect::<Result<_>>()?;

            for (&i, out) in batch.iter().zip(&outcomes) {
                rank_sum += out.rank().unwrap_or(out.verifications()) as u64;
                verifications += out.verifications() as u64;
                exhausted += usize::from(out.is_exhausted());
                let label = out.assignment();
                pseudo_hits += label
                    .iter()
                    .zip(truths[i].iter())
                    .filter(|(a, b)| a == b)
                    .count();
                symbols += label.len();
            }
            let items: Vec<(&[Vec<f64>], &Assignment)> = batch
                .iter()
                .zip(&outcomes)
                .map(|(&i, out)| (dataset.samples[i].features.as_slice(), out.assignment()))
                .collect();
            model.grad_step(&items, cfg.lr)?;
        }

        let preds = predict_all(&model, dataset)?;
        let n = dataset.len() as f64;
        history.push(EpochStats {
            epoch,
            mean_rank_k: rank_sum as f64 / n,
            mean_verifications: verifications as f64 / n,
            total_verifications: verifications,
            fraction_exhausted: exhausted as f64 / n,
            pseudo_label_accuracy: pseudo_hits as f64 / symbols as f64,
            symbol_accuracy: symbol_accuracy(&preds, &truths),
            adjusted_accuracy: adjusted_accuracy(&preds, dataset, group)?,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok((model, history))
}

/// Result of a test-time correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtcOutcome {
    pub assignment: Assignment,
    /// Rank of the verified assignment; `None` when the budget ran out.
    pub rank: Option<usize>,
    pub verifications: usize,
    /// Set when no verified assignment was found and the raw argmax is returned.
    pub uncorrected: bool,
}

/// Forward pass (no alignment) followed by the constrained search.
pub fn predict_ttc<V: Verify + ?Sized>(
    model: &SoftmaxModel,
    features: &[Vec<f64>],
    verifier: &V,
    variant: ScoreVariant,
    budget: usize,
) -> Result<TtcOutcome> {
    let grid = model.forward(features)?;
    let score = score_model_for(variant, &grid);
    let out = solve_cop(&grid, &score, verifier, budget)?;
    Ok(match out {
        CopOutcome::Solved {
            assignment,
            rank,
            verifications,
        } => TtcOutcome {
            assignment,
            rank: Some(rank),
            verifications,
            uncorrected: false,
        },
        CopOutcome::Exhausted { verifications, .. } => TtcOutcome {
            assignment: grid.argmax(),
            rank: None,
            verifications,
            uncorrected: true,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub raw_accuracy: f64,
    pub ttc_accuracy: f64,
    pub adjusted_accuracy: f64,
    /// Fraction of TTC outputs the verifier accepts.
    pub verified_fraction: f64,
    pub uncorrected_fraction: f64,
    /// TTC outputs not flagged uncorrected that the verifier still rejects. Always 0.
    pub ttc_violations: usize,
    /// Share of raw predictions taken by the most frequent symbol.
    pub modal_share: f64,
    pub mean_rank_k: f64,
}

pub fn evaluate(
    model: &SoftmaxModel,
    dataset: &Dataset,
    group: Option<&[Permutation]>,
    variant: ScoreVariant,
    budget: usize,
) -> Result<EvalMetrics> {
    if dataset.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()));
    }
    if budget == 0 {
        return Err(Error::Config("search budget must be >= 1".into()));
    }
    check_compatible(model, dataset)?;
    let truths: Vec<&Assignment> = dataset.samples.iter().map(|s| &s.truth).collect();
    let raw = predict_all(model, dataset)?;
    let ttc: Vec<(TtcOutcome, bool)> = (0..dataset.len())
        .into_par_iter()
        .map(|i| {
            let verifier = dataset.verifier_for(i)?;
            let out = predict_ttc(
                model,
                &dataset.samples[i].features,
                &verifier,
                variant,
                budget,
            )?;
            let ok = verifier.verify(&out.assignment)?;
            Ok((out, ok))
        })
        .collect::<Result<_>>()?;

    let n = dataset.len() as f64;
    let ttc_preds: Vec<Assignment> = ttc.iter().map(|(o, _)| o.assignment.clone()).collect();
    let mut counts = vec![0usize; dataset.task.alphabet_size()];
    raw.iter()
        .flat_map(|a| a.iter())
        .for_each(|&s| counts[s] += 1);
    let total_symbols: usize = counts.iter().sum();
    Ok(EvalMetrics {
        raw_accuracy: symbol_accuracy(&raw, &truths),
        ttc_accuracy: symbol_accuracy(&ttc_preds, &truths),
        adjusted_accuracy: adjusted_accuracy(&raw, dataset, group)?,
        verified_fraction: ttc.iter().filter(|(_, ok)| *ok).count() as f64 / n,
        uncorrected_fraction: ttc.iter().filter(|(o, _)| o.uncorrected).count() as f64 / n,
        ttc_violations: ttc.iter().filter(|(o, ok)| !o.uncorrected && !ok).count(),
        modal_share: counts.iter().copied().max().unwrap_or(0) as f64 / total_symbols.max(1) as f64,
        mean_rank_k: ttc
            .iter()
            .map(|(o, _)| o.rank.unwrap_or(o.verifications) as f64)
            .sum::<f64>()
            / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{gen_dataset, GlyphConfig, InitScale, Sample, TaskSpec};
    use crate::verifiers::{verify_sort, Verifier};

    fn base_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            batch_size: 16,
            lr: 0.5,
            align: None,
            score: ScoreVariant::IndependentProduct,
            budget: 100,
            seed: 1,
        }
    }

    #[test]
    fn rejects_bad_config() {
        let task = TaskSpec::Addition { base: 2, digits: 1 };
        let ds = gen_dataset(&task, 8, &GlyphConfig::for_alphabet(2, 0.1, 1)).unwrap();
        let m = SoftmaxModel::zeros(2, 4);
        assert!(train(
            m.clone(),
            &ds,
            &TrainConfig {
                epochs: 0,
                ..base_cfg()
            },
            None
        )
        .is_err());
        assert!(train(
            m.clone(),
            &ds,
            &TrainConfig {
                budget: 0,
                ..base_cfg()
            },
            None
        )
        .is_err());
        assert!(matches!(
            train(SoftmaxModel::zeros(3, 4), &ds, &base_cfg(), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn accept_all_is_self_training() {
        // A uniform model with an accept-all rule: rank 1 every time and the
        // pseudo-labels are the model's own argmax.
        let task = TaskSpec::AllDifferent { k: 3, len: 1 };
        let ds = gen_dataset(&task, 30, &GlyphConfig::for_alphabet(3, 0.1, 2)).unwrap();
        let m = SoftmaxModel::zeros(3, 6);
        let (_, stats) = train(m, &ds, &base_cfg(), None).unwrap();
        for s in &stats {
            assert_eq!(s.mean_rank_k, 1.0);
            assert_eq!(s.fraction_exhausted, 0.0);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let task = TaskSpec::Addition { base: 3, digits: 1 };
        let ds = gen_dataset(&task, 64, &GlyphConfig::for_alphabet(3, 0.3, 4)).unwrap();
        let cfg = TrainConfig {
            align: Some(AlignSettings {
                prior: ds.empirical_prior(),
                row_renormalize: true,
                decay_epochs: 1,
            }),
            ..base_cfg()
        };
        let m = SoftmaxModel::random(3, 6, InitScale::default(), 5);
        let (m1, s1) = train(m.clone(), &ds, &cfg, None).unwrap();
        let (m2, s2) = train(m, &ds, &cfg, None).unwrap();
        assert_eq!(m1, m2);
        let strip = |s: &[EpochStats]| {
            s.iter()
                .map(|e| EpochStats {
                    wall_time_s: 0.0,
                    ..e.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&s1), strip(&s2));
    }

    #[test]
    fn ttc_returns_verified_argmax_unchanged() {
        let mut m = SoftmaxModel::zeros(4, 8);
        for c in 0..4 {
            m.weights[c * 8 + 2 * c] = 10.0;
        }
        let feats: Vec<Vec<f64>> = [0, 2, 3]
            .iter()
            .map(|&c| crate::perception::glyph_prototype(c, 4, 8))
            .collect();
        let out = predict_ttc(
            &m,
            &feats,
            &Verifier::Sort,
            ScoreVariant::IndependentProduct,
            10,
        )
        .unwrap();
        assert_eq!(out.assignment.symbols(), &[0, 2, 3]);
        assert_eq!(out.rank, Some(1));
    }

    #[test]
    fn ttc_fixes_near_tie_sort_violation() {
        // Grid argmax is [2, 1, 3] with a near tie on the first two positions.
        let grid = ConfidenceGrid::new(vec![
            vec![0.05, 0.44, 0.46, 0.05],
            vec![0.05, 0.46, 0.44, 0.05],
            vec![0.02, 0.02, 0.02, 0.94],
        ])
        .unwrap();
        assert_eq!(grid.argmax().symbols(), &[2, 1, 3]);
        let out = solve_cop(&grid, &ScoreModel::independent(), &Verifier::Sort, 100).unwrap();
        assert!(verify_sort(out.assignment()));
        assert_eq!(out.assignment().symbols(), &[1, 2, 3]);
    }

    #[test]
    fn ttc_budget_one_flags_uncorrected() {
        let mut m = SoftmaxModel::zeros(3, 2);
        m.bias = vec![0.0, 5.0, 0.0];
        let feats = vec![vec![0.0, 0.0]; 2];
        let out = predict_ttc(
            &m,
            &feats,
            &Verifier::Sort,
            ScoreVariant::IndependentProduct,
            1,
        )
        .unwrap();
        assert!(out.uncorrected);
        assert_eq!(out.assignment.symbols(), &[1, 1]);
        assert_eq!(out.rank, None);
    }

    fn oracle_dataset(task: TaskSpec) -> Dataset {
        let k = task.alphabet_size();
        gen_dataset(&task, 200, &GlyphConfig::for_alphabet(k, 0.0, 8)).unwrap()
    }

    fn perfect_model(k: usize) -> SoftmaxModel {
        let mut m = SoftmaxModel::zeros(k, 2 * k);
        for c in 0..k {
            m.weights[c * 2 * k + 2 * c] = 20.0;
            m.weights[c * 2 * k + 2 * c + 1] = 20.0;
        }
        m
    }

    #[test]
    fn evaluate_perfect_model() {
        let ds = oracle_dataset(TaskSpec::Addition { base: 4, digits: 1 });
        let metrics = evaluate(
            &perfect_model(4),
            &ds,
            None,
            ScoreVariant::IndependentProduct,
            50,
        )
        .unwrap();
        assert_eq!(metrics.raw_accuracy, 1.0);
        assert_eq!(metrics.ttc_accuracy, 1.0);
        assert_eq!(metrics.adjusted_accuracy, 1.0);
        assert_eq!(metrics.verified_fraction, 1.0);
        assert_eq!(metrics.ttc_violations, 0);
    }

    #[test]
    fn evaluate_random_model_near_chance() {
        let task = TaskSpec::Addition {
            base: 10,
            digits: 1,
        };
        let ds = gen_dataset(&task, 500, &GlyphConfig::for_alphabet(10, 0.3, 8)).unwrap();
        // 2000 symbols; random labels come from the seeded weights
        let m = SoftmaxModel::random(
            10,
            20,
            InitScale {
                weight_std: 1.0,
                bias_std: 0.0,
            },
            3,
        );
        let metrics = evaluate(&m, &ds, None, ScoreVariant::IndependentProduct, 10).unwrap();
        assert!(metrics.raw_accuracy < 0.35, "{}", metrics.raw_accuracy);
    }

    #[test]
    fn evaluate_relabeled_model() {
        let task = TaskSpec::AllDifferent { k: 3, len: 3 };
        let mut ds = oracle_dataset(task);
        let swap = Permutation::transposition(3, 0, 1);
        for s in &mut ds.samples {
            s.truth = Assignment::from_vec(swap.apply_all(&s.truth));
        }
        let group = vec![Permutation::identity(3), swap];
        let m = perfect_model(3);
        let metrics =
            evaluate(&m, &ds, Some(&group), ScoreVariant::IndependentProduct, 10).unwrap();
        assert!(metrics.raw_accuracy < 1.0);
        assert_eq!(metrics.adjusted_accuracy, 1.0);
    }

    #[test]
    fn chess_sample_needs_positions() {
        let task = TaskSpec::Chess { pieces: 2 };
        let sample = Sample {
            features: vec![vec![0.0; 12]; 2],
            truth: Assignment::from_vec(vec![0, 1]),
            positions: None,
        };
        assert!(Dataset::new(task, vec![sample]).is_err());
    }
}
