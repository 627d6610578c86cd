use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use vl_core::experiment::{run_on, ExperimentConfig, ExperimentResult};
use vl_core::perception::{gen_dataset, Dataset};
use vl_core::trainer::{EpochStats, EvalMetrics};

use crate::args::{RunArgs, TaskArgs};
use crate::clock::Clock;
use crate::cmd::symmetry::task_group;
use crate::io::{blob_hash, dataset_to_jsonl, read_dataset, read_json, write_csv, write_json};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Training set (JSON lines); generated from --n and --seed when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out set (JSON lines); generated from --n-test when omitted.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-epoch statistics CSV; stdout when no output file is given at all.
    #[arg(long)]
    pub out_stats: Option<PathBuf>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    #[arg(long)]
    pub out_record: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    /// File the set was read from; `None` when generated from the config.
    pub path: Option<String>,
    pub samples: usize,
    pub sha256: String,
}

impl DataSource {
    fn describe(dataset: &Dataset, path: Option<&Path>) -> Result<Self> {
        Ok(DataSource {
            path: path.map(|p| p.display().to_string()),
            samples: dataset.len(),
            sha256: blob_hash(&dataset_to_jsonl(dataset)?),
        })
    }
}

/// Everything needed to rerun a training job and check its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub train_data: DataSource,
    pub test_data: Option<DataSource>,
    /// Hash over the config and both data hashes.
    pub input_hash: String,
    pub stats: Vec<EpochStats>,
    pub train_metrics: EvalMetrics,
    pub test_metrics: Option<EvalMetrics>,
    pub seed: u64,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
}

#[derive(Debug, Serialize)]
struct StatsRow {
    epoch: usize,
    #[serde(rename = "mean_rank_K")]
    mean_rank_k: f64,
    mean_verifications: f64,
    fraction_exhausted: f64,
    pseudo_label_accuracy: f64,
    symbol_accuracy: f64,
    adjusted_accuracy: f64,
    wall_time_s: f64,
}

impl From<&EpochStats> for StatsRow {
    fn from(s: &EpochStats) -> Self {
        StatsRow {
            epoch: s.epoch,
            mean_rank_k: s.mean_rank_k,
            mean_verifications: s.mean_verifications,
            fraction_exhausted: s.fraction_exhausted,
            pseudo_label_accuracy: s.pseudo_label_accuracy,
            symbol_accuracy: s.symbol_accuracy,
            adjusted_accuracy: s.adjusted_accuracy,
            wall_time_s: s.wall_time_s,
        }
    }
}

pub fn write_stats(path: Option<&Path>, history: &[EpochStats]) -> Result<()> {
    let rows: Vec<StatsRow> = history.iter().map(StatsRow::from).collect();
    write_csv(path, &rows)
}

fn input_hash(
    cfg: &ExperimentConfig,
    train: &DataSource,
    test: Option<&DataSource>,
) -> Result<String> {
    let mut content = serde_json::to_vec(cfg)?;
    content.push(b'\n');
    content.extend_from_slice(train.sha256.as_bytes());
    if let Some(t) = test {
        content.push(b'\n');
        content.extend_from_slice(t.sha256.as_bytes());
    }
    Ok(blob_hash(&content))
}

/// Loads or generates the data sets a config asks for.
fn datasets(
    cfg: &ExperimentConfig,
    train_path: Option<&Path>,
    test_path: Option<&Path>,
) -> Result<(Dataset, Option<Dataset>)> {
    let train = match train_path {
        Some(p) => read_dataset(p, cfg.task)?,
        None => gen_dataset(&cfg.task, cfg.n_train, &cfg.glyph(cfg.train_data_seed()))?,
    };
    let test = match test_path {
        Some(p) => Some(read_dataset(p, cfg.task)?),
        None if cfg.n_test > 0 => Some(gen_dataset(
            &cfg.task,
            cfg.n_test,
            &cfg.glyph(cfg.test_data_seed()),
        )?),
        None => None,
    };
    Ok((train, test))
}

pub fn execute(
    cfg: &ExperimentConfig,
    train: &Dataset,
    test: Option<&Dataset>,
    clock: Clock,
) -> Result<ExperimentResult> {
    let group = task_group(&cfg.task)?;
    let mut result = run_on(cfg, train, test, group.as_deref())?;
    for s in &mut result.history {
        s.wall_time_s = clock.seconds(s.wall_time_s);
    }
    Ok(result)
}

pub fn run(args: &TrainArgs, clock: Clock) -> Result<()> {
    let started_at = clock.timestamp();
    let mut cfg = args.run.config(args.task.spec(), args.seed);
    let (train, test) = datasets(&cfg, args.data.as_deref(), args.test_data.as_deref())?;
    if args.data.is_some() {
        cfg.n_train = train.len();
        cfg.feature_dim = train.feature_dim();
    }
    if let Some(t) = &test {
        cfg.n_test = t.len();
    }
    let result = execute(&cfg, &train, test.as_ref(), clock)?;

    let train_src = DataSource::describe(&train, args.data.as_deref())?;
    let test_src = test
        .as_ref()
        .map(|t| DataSource::describe(t, args.test_data.as_deref()))
        .transpose()?;
    let record = RunRecord {
        input_hash: input_hash(&cfg, &train_src, test_src.as_ref())?,
        config: cfg.clone(),
        train_data: train_src,
        test_data: test_src,
        stats: result.history.clone(),
        train_metrics: result.train_metrics.clone(),
        test_metrics: result.test_metrics.clone(),
        seed: cfg.seed,
        started_at,
        finished_at: clock.timestamp(),
    };

    let last = result.history.last().expect("at least one epoch");
    eprintln!(
        "epoch {}: symbol accuracy {:.4}, mean rank {:.2}; train ttc accuracy {:.4}",
        last.epoch, last.symbol_accuracy, last.mean_rank_k, result.train_metrics.ttc_accuracy
    );
    if let Some(m) = &result.test_metrics {
        eprintln!(
            "test: raw accuracy {:.4}, ttc accuracy {:.4}",
            m.raw_accuracy, m.ttc_accuracy
        );
    }

    let any_file =
        args.out_stats.is_some() || args.out_model.is_some() || args.out_record.is_some();
    if args.out_stats.is_some() || !any_file {
        write_stats(args.out_stats.as_deref(), &result.history)?;
    }
    if let Some(p) = &args.out_model {
        write_json(Some(p), &result.model)?;
    }
    if let Some(p) = &args.out_record {
        write_json(Some(p), &record)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Run record written by `train --out-record`.
    pub record: PathBuf,
}

fn strip_time(stats: &[EpochStats]) -> Vec<EpochStats> {
    stats
        .iter()
        .cloned()
        .map(|mut s| {
            s.wall_time_s = 0.0;
            s
        })
        .collect()
}

/// Reruns a recorded job and fails unless every statistic matches exactly.
pub fn replay(args: &ReplayArgs) -> Result<()> {
    let record: RunRecord = read_json(&args.record)?;
    let train_path = record.train_data.path.as_ref().map(PathBuf::from);
    let test_path = record
        .test_data
        .as_ref()
        .and_then(|t| t.path.as_ref())
        .map(PathBuf::from);
    let (train, test) = datasets(&record.config, train_path.as_deref(), test_path.as_deref())
        .context("rebuilding the recorded data")?;
    let train_src = DataSource::describe(&train, train_path.as_deref())?;
    if train_src.sha256 != record.train_data.sha256 {
        bail!("training data differs from the recorded hash");
    }
    if let (Some(t), Some(src)) = (&test, &record.test_data) {
        if DataSource::describe(t, test_path.as_deref())?.sha256 != src.sha256 {
            bail!("test data differs from the recorded hash");
        }
    }
    let result = execute(&record.config, &train, test.as_ref(), Clock::new(false))?;
    if strip_time(&result.history) != strip_time(&record.stats) {
        bail!("per-epoch statistics differ from the record");
    }
    if result.train_metrics != record.train_metrics || result.test_metrics != record.test_metrics {
        bail!("final metrics differ from the record");
    }
    eprintln!("replay of {} matches", args.record.display());
    Ok(())
}
