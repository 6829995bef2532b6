use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{decode, encode, load_csv, write_csv, ColumnSchema, Dataset, RawTable};
use crate::error::{Result, SeganError};
use crate::evaluation::{
    check_rates, downstream_pipeline, effective_config, evaluate, CellFailure, DownstreamResult,
    EvalResult, Method, PredictorConfig, Protocol, SeedScore, Target, Task,
};
use crate::model::{classifier_forward, Variant};
use crate::training::{impute, train, TrainConfig};

const MANIFEST_FORMAT: &str = "segan-manifest";

/// Command-specific part of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum PlanKind {
    Impute {
        model: Option<PathBuf>,
    },
    Eval {
        method: Method,
        mcar: Option<f64>,
    },
    Sweep {
        method: Method,
        rates: Vec<f64>,
    },
    Ablate {
        mcar: Option<f64>,
    },
    Downstream {
        method: Method,
        task: Task,
        target_col: Option<String>,
        mcar: Option<f64>,
    },
}

impl PlanKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlanKind::Impute { .. } => "impute",
            PlanKind::Eval { .. } => "eval",
            PlanKind::Sweep { .. } => "sweep",
            PlanKind::Ablate { .. } => "ablate",
            PlanKind::Downstream { .. } => "downstream",
        }
    }
}

/// A fully resolved run: everything needed to reproduce its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    #[serde(flatten)]
    pub kind: PlanKind,
    pub input: PathBuf,
    pub label_col: Option<String>,
    pub out: PathBuf,
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: String,
    #[serde(flatten)]
    pub plan: Plan,
    pub outputs: Vec<PathBuf>,
    pub failed_cells: usize,
    pub started_at: String,
    pub finished_at: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub failed_cells: usize,
}

impl Outcome {
    pub fn all_ok(&self) -> bool {
        self.failed_cells == 0
    }
}

/// `results.jsonl` → `results.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// `done.csv` → `done.model.json`.
pub fn model_path(out: &Path) -> PathBuf {
    out.with_extension("model.json")
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Runs a plan, writes its outputs and the manifest.
pub fn execute(plan: &Plan) -> Result<Outcome> {
    let started_at = now();
    let (outputs, failed_cells) = match &plan.kind {
        PlanKind::Impute { model } => run_impute(plan, model.as_deref())?,
        PlanKind::Eval { method, mcar } => {
            let ds = load(plan)?;
            let protocol = Protocol {
                mcar_rate: *mcar,
                jobs: plan.jobs,
                ..Protocol::default()
            };
            let result = evaluate(&ds, &plan.config, *method, &plan.seeds, &protocol);
            let cells = vec![rmse_cell(method.to_string(), *mcar, &plan.seeds, result)];
            write_results(plan, &cells)?
        }
        PlanKind::Sweep { method, rates } => {
            check_rates(rates)?;
            let ds = load(plan)?;
            let cells: Vec<Cell> = rates
                .iter()
                .map(|&rate| {
                    let protocol = Protocol {
                        mcar_rate: Some(rate),
                        jobs: plan.jobs,
                        ..Protocol::default()
                    };
                    let r = evaluate(&ds, &plan.config, *method, &plan.seeds, &protocol);
                    rmse_cell(method.to_string(), Some(rate), &plan.seeds, r)
                })
                .collect();
            write_results(plan, &cells)?
        }
        PlanKind::Ablate { mcar } => {
            let ds = load(plan)?;
            let protocol = Protocol {
                mcar_rate: *mcar,
                jobs: plan.jobs,
                ..Protocol::default()
            };
            let cells: Vec<Cell> = Variant::ALL
                .iter()
                .map(|&v| {
                    let r = evaluate(&ds, &plan.config, Method::Segan(v), &plan.seeds, &protocol);
                    rmse_cell(v.label().to_string(), *mcar, &plan.seeds, r)
                })
                .collect();
            write_results(plan, &cells)?
        }
        PlanKind::Downstream {
            method,
            task,
            target_col,
            mcar,
        } => {
            let (ds, target) = load_downstream(plan, *task, target_col.as_deref())?;
            let result = downstream_pipeline(
                &ds,
                &target,
                *method,
                &plan.config,
                &plan.seeds,
                *mcar,
                &PredictorConfig::default(),
                plan.jobs,
            );
            let cells = vec![downstream_cell(
                method.to_string(),
                *task,
                *mcar,
                &plan.seeds,
                result,
            )];
            write_results(plan, &cells)?
        }
    };

    let manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        plan: plan.clone(),
        outputs: outputs.clone(),
        failed_cells,
        started_at,
        finished_at: now(),
    };
    let path = manifest_path(&plan.out);
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).map_err(|e| SeganError::io(&path, e))?;
    Ok(Outcome {
        outputs,
        manifest: path,
        failed_cells,
    })
}

/// Re-runs a manifest's plan, optionally redirecting its outputs.
pub fn replay(manifest: &Path, out: Option<&Path>) -> Result<bool> {
    let text = std::fs::read_to_string(manifest).map_err(|e| SeganError::io(manifest, e))?;
    let recorded: RunManifest = serde_json::from_str(&text)?;
    if recorded.format != MANIFEST_FORMAT {
        return Err(SeganError::Config(format!(
            "{} is not a run manifest",
            manifest.display()
        )));
    }
    let mut plan = recorded.plan;
    if let Some(out) = out {
        plan.out = out.to_path_buf();
        if let PlanKind::Impute { model } = &mut plan.kind {
            *model = None;
        }
    }
    Ok(execute(&plan)?.all_ok())
}

fn load(plan: &Plan) -> Result<Dataset> {
    let (table, schema) = load_csv(&plan.input, plan.label_col.as_deref())?;
    encode(&table, &schema)
}

fn run_impute(plan: &Plan, model_out: Option<&Path>) -> Result<(Vec<PathBuf>, usize)> {
    let (table, schema) = load_csv(&plan.input, plan.label_col.as_deref())?;
    let ds = encode(&table, &schema)?;
    let config = effective_config(&ds, &plan.config);
    let (model, report) = train(&ds, &config)?;
    if let Some(last) = report.last() {
        log::info!(
            "trained {} epochs, final L_G {:.5}",
            report.epochs.len(),
            last.generator_loss
        );
    }
    let completed = impute(&model, &ds)?;
    let features = decode(completed.as_matrix(), &schema)?;

    let labels = match (&schema.label, &ds.labels) {
        (Some(spec), Some(present)) if present.present_count() < present.len() => {
            let predicted: Vec<usize> = if model.uses_classifier() {
                let probs = classifier_forward(&model, completed.as_matrix())?;
                (0..probs.cols())
                    .map(|j| argmax((0..probs.rows()).map(|r| probs.get(r, j))))
                    .collect()
            } else {
                // Without a trained classifier, fall back to the most frequent label.
                let mut counts = vec![0usize; spec.classes.len()];
                present
                    .as_slice()
                    .iter()
                    .flatten()
                    .for_each(|&y| counts[y] += 1);
                vec![argmax(counts.iter().map(|&c| c as f64)); present.len()]
            };
            Some(
                predicted
                    .into_iter()
                    .map(|y| spec.classes[y].clone())
                    .collect::<Vec<_>>(),
            )
        }
        _ => None,
    };
    let out_table = table.completed(&features, labels.as_deref())?;
    if out_table.missing_cells() > 0 {
        return Err(SeganError::Internal(format!(
            "{} cells remain empty after imputation",
            out_table.missing_cells()
        )));
    }
    write_csv(&plan.out, &out_table)?;
    let model_file = model_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| model_path(&plan.out));
    model.save(&model_file)?;
    println!(
        "imputed {} missing cells in {} rows -> {}",
        table.missing_cells(),
        table.samples(),
        plan.out.display()
    );
    Ok((vec![plan.out.clone(), model_file], 0))
}

/// Index of the largest value; the lowest index wins ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Splits a numeric column off the table for use as a regression target.
fn take_target(table: &RawTable, name: &str) -> Result<(RawTable, Vec<f64>)> {
    let idx =
        table.header.iter().position(|h| h == name).ok_or_else(|| {
            SeganError::Config(format!("target column {name:?} not found in header"))
        })?;
    if table.label_index == Some(idx) {
        return Err(SeganError::Config(
            "the regression target cannot also be the label column".into(),
        ));
    }
    let table = rows_with_target(table, idx)?;
    let values = table
        .rows
        .iter()
        .map(|row| {
            let cell = row[idx].as_deref().unwrap_or_default();
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    SeganError::Schema(format!("target {name:?} value {cell:?} is not numeric"))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = table.header.clone();
    header.remove(idx);
    let rows = table
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.remove(idx);
            r
        })
        .collect();
    let label = table.label_name().map(str::to_string);
    Ok((RawTable::new(header, rows, label.as_deref())?, values))
}

/// Drops rows whose column `idx` is missing; they have nothing to score against.
fn rows_with_target(table: &RawTable, idx: usize) -> Result<RawTable> {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r[idx].is_some())
        .cloned()
        .collect();
    let dropped = table.rows.len() - rows.len();
    if dropped > 0 {
        log::warn!(
            "dropping {dropped} rows without a {:?} value",
            table.header[idx]
        );
    }
    if rows.is_empty() {
        return Err(SeganError::DatasetTooSmall(format!(
            "no row has a {:?} value",
            table.header[idx]
        )));
    }
    RawTable::new(table.header.clone(), rows, table.label_name())
}

fn load_downstream(plan: &Plan, task: Task, target_col: Option<&str>) -> Result<(Dataset, Target)> {
    let (table, _) = load_csv(&plan.input, plan.label_col.as_deref())?;
    match task {
        Task::Classification => {
            let idx = table
                .label_index
                .ok_or_else(|| SeganError::Config("classification needs --label-col".into()))?;
            let table = rows_with_target(&table, idx)?;
            let schema = ColumnSchema::infer(&table)?;
            let ds = encode(&table, &schema)?;
            let labels = ds
                .labels
                .as_ref()
                .ok_or_else(|| SeganError::Config("classification needs --label-col".into()))?;
            if labels.classes() != 2 {
                return Err(SeganError::Evaluation(format!(
                    "AUC needs a binary label, found {} classes",
                    labels.classes()
                )));
            }
            let target = Target::from_labels(labels)?;
            Ok((ds, target))
        }
        Task::Regression => {
            let name = target_col
                .ok_or_else(|| SeganError::Config("regression needs --target-col".into()))?;
            let (features, values) = take_target(&table, name)?;
            let schema = ColumnSchema::infer(&features)?;
            Ok((encode(&features, &schema)?, Target::Values(values)))
        }
    }
}

/// One result row per (cell, seed).
#[derive(Debug, Serialize)]
struct Record<'a> {
    command: &'a str,
    method: &'a str,
    missing_rate: Option<f64>,
    seed: u64,
    metric: &'a str,
    value: Option<f64>,
    error: Option<&'a str>,
    /// Resolved settings, with `seed` set to this record's seed.
    config: TrainConfig,
}

struct Cell {
    method: String,
    missing_rate: Option<f64>,
    metric: &'static str,
    per_seed: Vec<SeedScore>,
    failures: Vec<CellFailure>,
    mean: Option<f64>,
    std: Option<f64>,
}

fn failed_all(seeds: &[u64], e: &SeganError) -> Vec<CellFailure> {
    seeds
        .iter()
        .map(|&seed| CellFailure {
            seed,
            error: e.to_string(),
        })
        .collect()
}

fn rmse_cell(method: String, rate: Option<f64>, seeds: &[u64], r: Result<EvalResult>) -> Cell {
    match r {
        Ok(r) => Cell {
            method,
            missing_rate: rate,
            metric: "rmse",
            per_seed: r.per_seed,
            failures: r.failures,
            mean: Some(r.rmse),
            std: Some(r.std),
        },
        Err(e) => Cell {
            method,
            missing_rate: rate,
            metric: "rmse",
            per_seed: Vec::new(),
            failures: failed_all(seeds, &e),
            mean: None,
            std: None,
        },
    }
}

fn downstream_cell(
    method: String,
    task: Task,
    rate: Option<f64>,
    seeds: &[u64],
    r: Result<DownstreamResult>,
) -> Cell {
    let metric = match task {
        Task::Classification => "auc",
        Task::Regression => "mae",
    };
    match r {
        Ok(r) => Cell {
            method,
            missing_rate: rate,
            metric,
            mean: r.auc.or(r.mae),
            std: Some(r.std),
            per_seed: r.per_seed,
            failures: r.failures,
        },
        Err(e) => Cell {
            method,
            missing_rate: rate,
            metric,
            per_seed: Vec::new(),
            failures: failed_all(seeds, &e),
            mean: None,
            std: None,
        },
    }
}

/// Writes the JSON Lines file and prints the summary table; returns the
/// outputs and the number of failed (cell, seed) pairs.
fn write_results(plan: &Plan, cells: &[Cell]) -> Result<(Vec<PathBuf>, usize)> {
    let command = plan.kind.name();
    let mut lines = String::new();
    let mut failed = 0;
    for cell in cells {
        let mut rows: Vec<(u64, Option<f64>, Option<&str>)> = cell
            .per_seed
            .iter()
            .map(|s| (s.seed, Some(s.value), None))
            .chain(
                cell.failures
                    .iter()
                    .map(|f| (f.seed, None, Some(f.error.as_str()))),
            )
            .collect();
        let position = |seed: u64| plan.seeds.iter().position(|&s| s == seed);
        rows.sort_by_key(|r| position(r.0));
        for (seed, value, error) in rows {
            let record = Record {
                command,
                method: &cell.method,
                missing_rate: cell.missing_rate,
                seed,
                metric: cell.metric,
                value,
                error,
                config: TrainConfig {
                    seed,
                    ..plan.config.clone()
                },
            };
            lines.push_str(&serde_json::to_string(&record)?);
            lines.push('\n');
        }
        failed += cell.failures.len();
    }
    std::fs::write(&plan.out, lines).map_err(|e| SeganError::io(&plan.out, e))?;
    print!("{}", summary(cells, plan.seeds.len()));
    Ok((vec![plan.out.clone()], failed))
}

fn summary(cells: &[Cell], seeds: usize) -> String {
    let mut out = format!(
        "{:<18} {:>6} {:>6} {:>10} {:>10} {:>6}\n",
        "method", "rate", "metric", "mean", "std", "ok"
    );
    for c in cells {
        let rate = c.missing_rate.map_or("-".to_string(), |r| format!("{r}"));
        let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
        let _ = writeln!(
            out,
            "{:<18} {:>6} {:>6} {:>10} {:>10} {:>6}",
            c.method,
            rate,
            c.metric,
            num(c.mean),
            num(c.std),
            format!("{}/{}", c.per_seed.len(), seeds)
        );
    }
    out
}
