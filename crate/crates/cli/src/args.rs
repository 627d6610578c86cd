use std::ops::RangeInclusive;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use vl_core::experiment::{ExperimentConfig, PriorChoice};
use vl_core::perception::{InitScale, TaskSpec};
use vl_core::score::ScoreVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    Addition,
    Sort,
    Match,
    Chess,
    Alldiff,
}

#[derive(Debug, Clone, Args)]
pub struct TaskArgs {
    #[arg(long, value_enum)]
    pub task: TaskKind,
    /// Numeral base (addition).
    #[arg(long, default_value_t = 10)]
    pub base: usize,
    /// Digits per operand (addition).
    #[arg(long, default_value_t = 1)]
    pub digits: usize,
    /// Alphabet size (sort, match, alldiff).
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Sequence length (sort, match, alldiff). Defaults to 4, or k for alldiff.
    #[arg(long)]
    pub len: Option<usize>,
    /// Pieces on the board (chess).
    #[arg(long, default_value_t = 4)]
    pub pieces: usize,
}

impl TaskArgs {
    pub fn spec(&self) -> TaskSpec {
        let len = self.len.unwrap_or(match self.task {
            TaskKind::Alldiff => self.k,
            _ => 4,
        });
        match self.task {
            TaskKind::Addition => TaskSpec::Addition {
                base: self.base,
                digits: self.digits,
            },
            TaskKind::Sort => TaskSpec::Sort { k: self.k, len },
            TaskKind::Match => TaskSpec::Match { k: self.k, len },
            TaskKind::Chess => TaskSpec::Chess {
                pieces: self.pieces,
            },
            TaskKind::Alldiff => TaskSpec::AllDifferent { k: self.k, len },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GlyphArgs {
    /// Gaussian noise added to every feature.
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    /// Feature dimension; defaults to two per symbol.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Maximum circular shift of a glyph, in feature dimensions.
    #[arg(long, default_value_t = 0)]
    pub shift: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    Independent,
    Consistency,
    Lex,
}

impl From<ScoreArg> for ScoreVariant {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::Independent => ScoreVariant::IndependentProduct,
            ScoreArg::Consistency => ScoreVariant::ConsistencyCount,
            ScoreArg::Lex => ScoreVariant::LexConsistencyThenProduct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Uniform,
    Empirical,
}

impl From<PriorArg> for PriorChoice {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Uniform => PriorChoice::Uniform,
            PriorArg::Empirical => PriorChoice::Empirical,
        }
    }
}

/// Training and evaluation settings shared by `train` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub glyph: GlyphArgs,
    /// Training sequences to generate.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Held-out sequences to generate; 0 skips the test set.
    #[arg(long, default_value_t = 500)]
    pub n_test: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = ScoreArg::Independent)]
    pub score: ScoreArg,
    #[arg(long)]
    pub no_align: bool,
    #[arg(long, value_enum, default_value_t = PriorArg::Empirical)]
    pub prior: PriorArg,
    /// Epochs over which alignment fades out; defaults to half the run.
    #[arg(long)]
    pub align_anneal_epochs: Option<usize>,
    /// Skip row renormalization after alignment.
    #[arg(long)]
    pub raw_align: bool,
    /// Verifier calls allowed per sequence.
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.1)]
    pub init_weight_std: f64,
    #[arg(long, default_value_t = 1.0)]
    pub init_bias_std: f64,
}

impl RunArgs {
    pub fn config(&self, task: TaskSpec, seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(task, seed);
        cfg.n_train = self.n;
        cfg.n_test = self.n_test;
        cfg.noise_sigma = self.glyph.sigma;
        cfg.feature_dim = self.glyph.dim;
        cfg.shift_range = self.glyph.shift;
        cfg.epochs = self.epochs;
        cfg.batch_size = self.batch;
        cfg.lr = self.lr;
        cfg.align = !self.no_align;
        cfg.prior = self.prior.into();
        cfg.row_renormalize = !self.raw_align;
        cfg.anneal_epochs = self.align_anneal_epochs;
        cfg.score = self.score.into();
        cfg.budget = self.budget;
        cfg.init = InitScale {
            weight_std: self.init_weight_std,
            bias_std: self.init_bias_std,
        };
        cfg
    }
}

/// Inclusive range written `a..b`, or a single value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span(pub RangeInclusive<usize>);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad bound {v:?}: {e}"))
        };
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        Ok(Span(lo..=hi))
    }
}
