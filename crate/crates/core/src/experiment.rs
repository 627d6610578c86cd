//! One end-to-end run: generate data, train, evaluate on a held-out set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perception::{gen_dataset, Dataset, GlyphConfig, InitScale, SoftmaxModel, TaskSpec};
use crate::score::ScoreVariant;
use crate::symmetry::Permutation;
use crate::trainer::{evaluate, train, AlignSettings, EpochStats, EvalMetrics, TrainConfig};
use crate::types::SymbolPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorChoice {
    Uniform,
    /// Symbol frequencies of the training truths.
    Empirical,
}

impl PriorChoice {
    pub fn resolve(self, dataset: &Dataset) -> SymbolPrior {
        match self {
            PriorChoice::Uniform => SymbolPrior::uniform(dataset.task.alphabet_size()),
            PriorChoice::Empirical => dataset.empirical_prior(),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    pub n_train: usize,
    pub n_test: usize,
    pub noise_sigma: f64,
    /// Feature dimension; `None` uses two dimensions per symbol.
    pub feature_dim: Option<usize>,
    pub shift_range: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub align: bool,
    pub prior: PriorChoice,
    pub row_renormalize: bool,
    /// `None` decays over the first half of training.
    pub anneal_epochs: Option<usize>,
    pub score: ScoreVariant,
    pub budget: usize,
    pub init: InitScale,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults for everything but the task and seed.
    pub fn new(task: TaskSpec, seed: u64) -> Self {
        ExperimentConfig {
            task,
            n_train: 2000,
            n_test: 500,
            noise_sigma: 0.3,
            feature_dim: None,
            shift_range: 0,
            epochs: 10,
            batch_size: 32,
            lr: 0.001,
            align: true,
            prior: PriorChoice::Empirical,
            row_renormalize: true,
            anneal_epochs: None,
            score: ScoreVariant::IndependentProduct,
            budget: 1000,
            init: InitScale::default(),
            seed,
        }
    }

    pub fn glyph(&self, seed: u64) -> GlyphConfig {
        GlyphConfig {
            feature_dim: self.feature_dim.unwrap_or(2 * self.task.alphabet_size()),
            noise_sigma: self.noise_sigma,
            shift_range: self.shift_range,
            seed,
        }
    }

    /// Seed of the training set; the test set and model init use derived seeds.
    pub fn train_data_seed(&self) -> u64 {
        self.seed
    }

    pub fn test_data_seed(&self) -> u64 {
        self.seed.wrapping_add(0x5EED_0000_0000)
    }

    pub fn model_seed(&self) -> u64 {
        self.seed.wrapping_add(0x0DE1_0000_0000)
    }

    pub fn train_config(&self, train_set: &Dataset) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            align: self.align.then(|| AlignSettings {
                prior: self.prior.resolve(train_set),
                row_renormalize: self.row_renormalize,
                decay_epochs: self.anneal_epochs.unwrap_or(self.epochs.div_ceil(2)),
            }),
            score: self.score,
            budget: self.budget,
            seed: self.seed,
        }
    }

    pub fn initial_model(&self) -> SoftmaxModel {
        let glyph = self.glyph(0);
        SoftmaxModel::random(
            self.task.alphabet_size(),
            glyph.feature_dim,
            self.init,
            self.model_seed(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub history: Vec<EpochStats>,
    pub train_metrics: EvalMetrics,
    pub test_metrics: Option<EvalMetrics>,
    pub model: SoftmaxModel,
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    group: Option<&[Permutation]>,
) -> Result<ExperimentResult> {
    let train_set = gen_dataset(&cfg.task, cfg.n_train, &cfg.glyph(cfg.train_data_seed()))?;
    let test_set = if cfg.n_test > 0 {
        Some(gen_dataset(
            &cfg.task,
            cfg.n_test,
            &cfg.glyph(cfg.test_data_seed()),
        )?)
    } else {
        None
    };
    run_on(cfg, &train_set, test_set.as_ref(), group)
}

/// Trains on `train_set` and evaluates on both sets.
pub fn run_on(
    cfg: &ExperimentConfig,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    group: Option<&[Permutation]>,
) -> Result<ExperimentResult> {
    if train_set.task != cfg.task {
        return Err(Error::Config(
            "training set was generated for a different task".into(),
        ));
    }
    let dim = train_set.feature_dim().unwrap_or(cfg.glyph(0).feature_dim);
    let model = SoftmaxModel::random(cfg.task.alphabet_size(), dim, cfg.init, cfg.model_seed());
    let (model, history) = train(model, train_set, &cfg.train_config(train_set), group)?;
    let train_metrics = evaluate(&model, train_set, group, cfg.score, cfg.budget)?;
    let test_metrics = test_set
        .map(|t| evaluate(&model, t, group, cfg.score, cfg.budget))
        .transpose()?;
    Ok(ExperimentResult {
        history,
        train_metrics,
        test_metrics,
        model,
    })
}
