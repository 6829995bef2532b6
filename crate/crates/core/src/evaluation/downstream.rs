//! Post-imputation prediction: a small fully connected network trained on
//! the completed features, scored by AUC (binary classification) or MAE
//! (regression) on a held-out 20% of samples.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{corrupt, map_seeds, mean_std, CellFailure, Method, SeedScore};
use crate::data::{Dataset, LabelVector};
use crate::error::{Result, SeganError};
use crate::model::classifier_loss_grad;
use crate::numerics::{
    adam_step, mlp_backward, mlp_forward, mlp_forward_train, Activation, AdamState, Matrix,
    MlpLayer,
};
use crate::rng::{seeded, seeded_cell, Stream};
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

impl FromStr for Task {
    type Err = SeganError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(SeganError::Config(format!(
                "unknown task {other:?} (expected classification or regression)"
            ))),
        }
    }
}

/// Prediction target, one entry per sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Binary class indices (0 or 1).
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Target {
    pub fn task(&self) -> Task {
        match self {
            Target::Classes(_) => Task::Classification,
            Target::Values(_) => Task::Regression,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Target::Classes(c) => c.len(),
            Target::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class targets from a fully labeled vector.
    pub fn from_labels(labels: &LabelVector) -> Result<Target> {
        labels
            .as_slice()
            .iter()
            .map(|l| l.ok_or_else(|| SeganError::Evaluation("every sample needs a label".into())))
            .collect::<Result<Vec<_>>>()
            .map(Target::Classes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub test_fraction: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            hidden: vec![64, 64],
            epochs: 30,
            learning_rate: 0.005,
            dropout_rate: 0.5,
            batch_size: 128,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamResult {
    pub task: Task,
    pub method: String,
    pub missing_rate: Option<f64>,
    /// Mean test AUC; set for classification only.
    pub auc: Option<f64>,
    /// Mean test MAE; set for regression only.
    pub mae: Option<f64>,
    pub std: f64,
    pub per_seed: Vec<SeedScore>,
    pub failures: Vec<CellFailure>,
}

/// Area under the ROC curve via the rank statistic; tied scores count one half.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(SeganError::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(SeganError::Evaluation(
            "AUC needs both classes in the evaluation split".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let tie = order[i..]
            .iter()
            .take_while(|&&k| scores[k] == scores[order[i]])
            .count();
        // Ranks i+1 ..= i+tie share their average.
        let avg = i as f64 + (tie as f64 + 1.0) / 2.0;
        rank_sum += avg * order[i..i + tie].iter().filter(|&&k| positive[k]).count() as f64;
        i += tie;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

pub fn mae(predicted: &[f64], truth: &[f64]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / truth.len() as f64
}

/// Shuffled `(train, test)` sample indices.
fn split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SeganError::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let test = ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(1));
    if n < 2 {
        return Err(SeganError::DatasetTooSmall(format!(
            "{n} samples cannot be split into train and test"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed, Stream::Downstream));
    let train = order.split_off(test);
    Ok((train, order))
}

struct Predictor {
    layers: Vec<MlpLayer>,
    /// Regression targets are standardized; predictions are `offset + scale·y`.
    offset: f64,
    scale: f64,
}

impl Predictor {
    fn refs(&self) -> Vec<&MlpLayer> {
        self.layers.iter().collect()
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(mlp_forward(&self.refs(), x)?.0)
    }
}

fn train_predictor<R: RngCore>(
    x: &Matrix,
    target: &Target,
    cfg: &PredictorConfig,
    rng: &mut R,
) -> Result<Predictor> {
    let (out_dim, out_act) = match target {
        Target::Classes(_) => (2, Activation::Softmax),
        Target::Values(_) => (1, Activation::Identity),
    };
    let mut widths = vec![x.rows()];
    widths.extend(&cfg.hidden);
    widths.push(out_dim);
    let layers: Vec<MlpLayer> = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i + 2 == widths.len() {
                out_act
            } else {
                Activation::Relu
            };
            MlpLayer::init(w[0], w[1], act, rng)
        })
        .collect();

    let (offset, scale, values) = match target {
        Target::Values(v) => {
            let (mean, std) = mean_std(v);
            let scale = if std > 0.0 { std } else { 1.0 };
            let z: Vec<f64> = v.iter().map(|t| (t - mean) / scale).collect();
            // A constant target gets a constant predictor.
            (mean, if std > 0.0 { std } else { 0.0 }, z)
        }
        Target::Classes(_) => (0.0, 1.0, Vec::new()),
    };
    let mut model = Predictor {
        layers,
        offset,
        scale,
    };
    let mut state = AdamState::new(&model.refs());
    let n = x.cols();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for cols in order.chunks(cfg.batch_size.max(1)) {
            let xb = x.select_columns(cols);
            let (out, cache) = mlp_forward_train(&model.refs(), &xb, cfg.dropout_rate, rng)?;
            let grad = match target {
                Target::Classes(c) => {
                    let labels: Vec<Option<usize>> = cols.iter().map(|&j| Some(c[j])).collect();
                    classifier_loss_grad(&labels, &out)
                }
                Target::Values(_) => {
                    let m = cols.len() as f64;
                    Matrix::from_fn(1, cols.len(), |_, k| {
                        2.0 * (out.get(0, k) - values[cols[k]]) / m
                    })
                }
            };
            let back = mlp_backward(&model.refs(), &cache, &grad)?;
            let mut refs: Vec<&mut MlpLayer> = model.layers.iter_mut().collect();
            adam_step(&mut refs, &back.grads, &mut state, cfg.learning_rate)?;
        }
    }
    Ok(model)
}

fn select<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Trains on `train` and scores on `test`: AUC for classes, MAE for values.
fn score_split(
    features: &Matrix,
    target: &Target,
    train: &[usize],
    test: &[usize],
    seed: u64,
    cfg: &PredictorConfig,
) -> Result<f64> {
    let sub = |idx: &[usize]| match target {
        Target::Classes(c) => Target::Classes(select(c, idx)),
        Target::Values(v) => Target::Values(select(v, idx)),
    };
    let test_target = sub(test);
    if let Target::Classes(c) = &test_target {
        if c.iter().all(|&y| y == c[0]) {
            return Err(SeganError::Evaluation(
                "test split holds a single class".into(),
            ));
        }
    }
    let mut rng = seeded_cell(seed, Stream::Downstream, 1);
    let model = train_predictor(&features.select_columns(train), &sub(train), cfg, &mut rng)?;
    let out = model.predict(&features.select_columns(test))?;
    match test_target {
        Target::Classes(c) => {
            let positive: Vec<bool> = c.iter().map(|&y| y == 1).collect();
            auc(out.row(1), &positive)
        }
        Target::Values(v) => {
            let pred: Vec<f64> = out
                .row(0)
                .iter()
                .map(|z| model.offset + model.scale * z)
                .collect();
            Ok(mae(&pred, &v))
        }
    }
}

fn check_target(target: &Target, samples: usize) -> Result<()> {
    if target.len() != samples {
        return Err(SeganError::Shape(format!(
            "{} targets for {samples} samples",
            target.len()
        )));
    }
    match target {
        Target::Classes(c) if c.iter().any(|&y| y > 1) => Err(SeganError::Evaluation(
            "AUC is defined for binary targets only".into(),
        )),
        Target::Values(v) if v.iter().any(|x| !x.is_finite()) => Err(SeganError::Evaluation(
            "regression target has non-finite values".into(),
        )),
        _ => Ok(()),
    }
}

fn aggregate(
    task: Task,
    method: String,
    missing_rate: Option<f64>,
    seeds: &[u64],
    outcomes: Vec<Result<f64>>,
) -> Result<DownstreamResult> {
    let mut per_seed = Vec::new();
    let mut failures = Vec::new();
    for (&seed, outcome) in seeds.iter().zip(outcomes) {
        match outcome {
            Ok(value) => per_seed.push(SeedScore { seed, value }),
            Err(e) => failures.push(CellFailure {
                seed,
                error: e.to_string(),
            }),
        }
    }
    if per_seed.is_empty() {
        let detail: Vec<String> = failures
            .iter()
            .map(|f| format!("seed {}: {}", f.seed, f.error))
            .collect();
        return Err(SeganError::Evaluation(format!(
            "every downstream seed failed: {}",
            detail.join("; ")
        )));
    }
    let (mean, std) = mean_std(&per_seed.iter().map(|s| s.value).collect::<Vec<_>>());
    Ok(DownstreamResult {
        task,
        method,
        missing_rate,
        auc: (task == Task::Classification).then_some(mean),
        mae: (task == Task::Regression).then_some(mean),
        std,
        per_seed,
        failures,
    })
}

/// Downstream score of already complete features (`d × n`).
pub fn downstream_eval(
    features: &Matrix,
    target: &Target,
    seeds: &[u64],
    cfg: &PredictorConfig,
) -> Result<DownstreamResult> {
    check_target(target, features.cols())?;
    if seeds.is_empty() {
        return Err(SeganError::Config("at least one seed is required".into()));
    }
    let outcomes = seeds
        .iter()
        .map(|&seed| {
            let (train, test) = split(features.cols(), cfg.test_fraction, seed)?;
            score_split(features, target, &train, &test, seed, cfg)
        })
        .collect();
    aggregate(target.task(), "complete".into(), None, seeds, outcomes)
}

/// Corrupts, imputes with `method` and scores the downstream predictor, per
/// seed. Test-split labels are hidden from the imputer.
#[allow(clippy::too_many_arguments)]
pub fn downstream_pipeline(
    dataset: &Dataset,
    target: &Target,
    method: Method,
    config: &TrainConfig,
    seeds: &[u64],
    mcar_rate: Option<f64>,
    cfg: &PredictorConfig,
    jobs: usize,
) -> Result<DownstreamResult> {
    check_target(target, dataset.samples())?;
    if seeds.is_empty() {
        return Err(SeganError::Config("at least one seed is required".into()));
    }
    let outcomes = map_seeds(seeds, jobs, |seed| {
        let (train, test) = split(dataset.samples(), cfg.test_fraction, seed)?;
        let mut base = corrupt(dataset, mcar_rate, seed)?;
        if let Some(labels) = &base.labels {
            let mut hidden = labels.as_slice().to_vec();
            for &j in &test {
                hidden[j] = None;
            }
            base.labels = Some(LabelVector::new(hidden, labels.classes())?);
        }
        let config = TrainConfig {
            seed,
            ..config.clone()
        };
        let imputed = method.impute(&base, &config)?;
        score_split(&imputed, target, &train, &test, seed, cfg)
    })?;
    aggregate(
        target.task(),
        method.to_string(),
        mcar_rate,
        seeds,
        outcomes,
    )
}
