//! Experiment protocol: holdout RMSE, multi-seed averaging, missing-rate
//! sweeps, ablations and downstream prediction.
//!
//! Every random draw in a cell comes from a stream keyed by the cell's seed,
//! so all methods compared under one seed see the same corruption and the
//! same holdout entries.

mod baseline;
mod downstream;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use baseline::{column_mean_impute, column_mode_impute};
pub use downstream::{
    auc, downstream_eval, downstream_pipeline, mae, DownstreamResult, PredictorConfig, Target, Task,
};

use crate::data::{encode, holdout_known, inject_mcar, load_csv, Dataset, HoldoutSet};
use crate::error::{Result, SeganError};
use crate::model::Variant;
use crate::numerics::Matrix;
use crate::rng::{seeded, seeded_cell, Stream};
use crate::training::{impute, train_variant, TrainConfig};

/// Share of observed entries hidden for scoring.
pub const HOLDOUT_FRACTION: f64 = 0.2;
pub const DEFAULT_RATES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Root mean squared error over the holdout entries.
pub fn rmse(imputed: &Matrix, truth: &Matrix, holdout: &HoldoutSet) -> Result<f64> {
    imputed.ensure_same_shape(truth, "rmse")?;
    if holdout.is_empty() {
        return Err(SeganError::Evaluation("holdout set is empty".into()));
    }
    let sum: f64 = holdout
        .iter()
        .map(|(r, c)| (imputed.get(r, c) - truth.get(r, c)).powi(2))
        .sum();
    Ok((sum / holdout.len() as f64).sqrt())
}

/// An imputation method under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Segan(Variant),
    ColumnMean,
    ColumnMode,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Segan(v) => write!(f, "{}", v.label()),
            Method::ColumnMean => f.write_str("mean"),
            Method::ColumnMode => f.write_str("mode"),
        }
    }
}

impl FromStr for Method {
    type Err = SeganError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Method::ColumnMean),
            "mode" => Ok(Method::ColumnMode),
            "segan" => Ok(Method::Segan(Variant::Full)),
            other => other.parse().map(Method::Segan),
        }
    }
}

impl Method {
    /// Completes `dataset` (normalized space). SEGAN variants train with
    /// `config`; without labels the classifier term is switched off.
    pub fn impute(self, dataset: &Dataset, config: &TrainConfig) -> Result<Matrix> {
        match self {
            Method::ColumnMean => Ok(column_mean_impute(dataset)),
            Method::ColumnMode => Ok(column_mode_impute(dataset)),
            Method::Segan(variant) => {
                let config = effective_config(dataset, config);
                let (model, _) = train_variant(dataset, &config, variant)?;
                Ok(impute(&model, dataset)?.into_matrix())
            }
        }
    }
}

/// `config` with β forced to 0 when the dataset carries no labels.
pub fn effective_config(dataset: &Dataset, config: &TrainConfig) -> TrainConfig {
    let mut config = config.clone();
    if dataset.labels.is_none() {
        config.beta = 0.0;
    }
    config
}

/// How a single (seed, method) cell prepares its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub holdout_fraction: f64,
    /// MCAR deletion applied before the holdout split.
    pub mcar_rate: Option<f64>,
    /// Worker threads for independent seeds.
    pub jobs: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            holdout_fraction: HOLDOUT_FRACTION,
            mcar_rate: None,
            jobs: 1,
        }
    }
}

impl Protocol {
    pub fn with_mcar(rate: f64) -> Self {
        Protocol {
            mcar_rate: Some(rate),
            ..Protocol::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub seed: u64,
    pub error: String,
}

/// Multi-seed RMSE for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: String,
    pub missing_rate: Option<f64>,
    pub config: TrainConfig,
    pub per_seed: Vec<SeedScore>,
    pub failures: Vec<CellFailure>,
    /// Mean RMSE over the surviving seeds.
    pub rmse: f64,
    /// Sample standard deviation (n − 1) of the per-seed RMSE; 0 for one seed.
    pub std: f64,
}

impl EvalResult {
    pub fn values(&self) -> Vec<f64> {
        self.per_seed.iter().map(|s| s.value).collect()
    }
}

/// Arithmetic mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Stream cell for an MCAR rate, so a rate draws the same mask in a sweep and
/// in a standalone run.
fn rate_cell(rate: f64) -> u32 {
    (rate * 1e6).round() as u32
}

/// Applies the protocol's MCAR deletion for `seed`.
pub fn corrupt(dataset: &Dataset, rate: Option<f64>, seed: u64) -> Result<Dataset> {
    match rate {
        None => Ok(dataset.clone()),
        Some(rate) => {
            let mut rng = seeded_cell(seed, Stream::Mcar, rate_cell(rate));
            let (_, mask) = inject_mcar(&dataset.data, &dataset.mask, rate, &mut rng)?;
            dataset.with_mask(mask)
        }
    }
}

/// Runs `f` over the seeds, on `jobs` threads when more than one is asked for.
/// Output order always follows `seeds`.
pub(crate) fn map_seeds<T: Send>(
    seeds: &[u64],
    jobs: usize,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    if jobs <= 1 {
        return Ok(seeds.iter().map(|&s| f(s)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SeganError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()))
}

/// Holdout RMSE of one method for one seed.
pub fn score_seed(
    dataset: &Dataset,
    config: &TrainConfig,
    method: Method,
    seed: u64,
    protocol: &Protocol,
) -> Result<f64> {
    let base = corrupt(dataset, protocol.mcar_rate, seed)?;
    let (train_mask, holdout) = holdout_known(
        &base.mask,
        protocol.holdout_fraction,
        &mut seeded(seed, Stream::Holdout),
    )?;
    let visible = base.with_mask(train_mask)?;
    let config = TrainConfig {
        seed,
        ..config.clone()
    };
    let imputed = method.impute(&visible, &config)?;
    rmse(&imputed, base.data.as_matrix(), &holdout)
}

/// Scores `method` over every seed. A failing seed is recorded and skipped;
/// the call fails only when no seed survives.
pub fn evaluate(
    dataset: &Dataset,
    config: &TrainConfig,
    method: Method,
    seeds: &[u64],
    protocol: &Protocol,
) -> Result<EvalResult> {
    if seeds.is_empty() {
        return Err(SeganError::Config("at least one seed is required".into()));
    }
    let outcomes = map_seeds(seeds, protocol.jobs, |seed| {
        score_seed(dataset, config, method, seed, protocol)
    })?;
    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for (&seed, outcome) in seeds.iter().zip(outcomes) {
        match outcome {
            Ok(value) => per_seed.push(SeedScore { seed, value }),
            Err(e) => {
                log::warn!("{method} seed {seed} failed: {e}");
                failures.push(CellFailure {
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    if per_seed.is_empty() {
        let detail: Vec<String> = failures
            .iter()
            .map(|f| format!("seed {}: {}", f.seed, f.error))
            .collect();
        return Err(SeganError::Evaluation(format!(
            "every seed failed for {method}: {}",
            detail.join("; ")
        )));
    }
    let (rmse, std) = mean_std(&per_seed.iter().map(|s| s.value).collect::<Vec<_>>());
    Ok(EvalResult {
        method: method.to_string(),
        missing_rate: protocol.mcar_rate,
        config: effective_config(dataset, config),
        per_seed,
        failures,
        rmse,
        std,
    })
}

/// Full SEGAN on an encoded dataset under the default protocol.
pub fn run_experiment(
    dataset: &Dataset,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<EvalResult> {
    evaluate(
        dataset,
        config,
        Method::Segan(Variant::Full),
        seeds,
        &Protocol::default(),
    )
}

/// Loads and encodes a CSV, then runs [`run_experiment`].
pub fn run_experiment_csv(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<EvalResult> {
    let (table, schema) = load_csv(path, label_column)?;
    let dataset = encode(&table, &schema)?;
    run_experiment(&dataset, config, seeds)
}

/// Rates must be non-empty, strictly ascending and inside (0, 1).
pub fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(SeganError::Config(
            "at least one missing rate is required".into(),
        ));
    }
    if let Some(r) = rates.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(SeganError::Config(format!(
            "missing rate {r} outside (0, 1)"
        )));
    }
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SeganError::Config(
            "missing rates must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Runs the experiment once per MCAR rate. Rates must be ascending and lie in (0, 1).
pub fn sweep_missing_rate(
    dataset: &Dataset,
    config: &TrainConfig,
    method: Method,
    rates: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<(f64, EvalResult)>> {
    check_rates(rates)?;
    rates
        .iter()
        .map(|&rate| {
            let protocol = Protocol {
                mcar_rate: Some(rate),
                jobs,
                ..Protocol::default()
            };
            evaluate(dataset, config, method, seeds, &protocol).map(|r| (rate, r))
        })
        .collect()
}

/// Evaluates the full model and its three ablations on identical splits.
pub fn run_ablation(
    dataset: &Dataset,
    config: &TrainConfig,
    seeds: &[u64],
    protocol: &Protocol,
) -> Result<Vec<(Variant, EvalResult)>> {
    Variant::ALL
        .iter()
        .map(|&v| evaluate(dataset, config, Method::Segan(v), seeds, protocol).map(|r| (v, r)))
        .collect()
}
