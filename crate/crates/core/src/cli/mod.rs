//! Command-line front end: flag parsing and config resolution. Running a
//! command goes through a [`Plan`], which is also what a manifest records and
//! what `replay` re-executes.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, manifest_path, model_path, Outcome, Plan, PlanKind, RunManifest};

use crate::error::{Result, SeganError};
use crate::evaluation::{Method, Task, DEFAULT_RATES, DEFAULT_SEEDS};
use crate::training::TrainConfig;

#[derive(Debug, Parser)]
#[command(
    name = "segan",
    version,
    about = "Semi-supervised GAN imputation for tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a CSV and write it back with every missing cell filled.
    Impute(ImputeArgs),
    /// Holdout RMSE of one method over several seeds.
    Eval(EvalArgs),
    /// Holdout RMSE across MCAR missing rates.
    Sweep(SweepArgs),
    /// Holdout RMSE of the full model and its three ablations.
    Ablate(AblateArgs),
    /// Prediction quality of a model trained on imputed data.
    Downstream(DownstreamArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column; without it the classifier is disabled.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Flat JSON object of training settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; the manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = positive_rate)]
    pub lr: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: Option<u64>,
    #[arg(long, value_parser = half_open_unit)]
    pub dropout: Option<f64>,
    #[arg(long, value_parser = closed_unit)]
    pub hint_rate: Option<f64>,
    #[arg(long, value_parser = left_open_unit)]
    pub label_rate: Option<f64>,
    #[arg(long, value_parser = non_negative)]
    pub alpha: Option<f64>,
    #[arg(long, value_parser = non_negative)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to save the trained model (default: next to --out).
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Experiment {
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,
    /// Worker threads for independent seeds.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: Experiment,
    /// segan, mean, mode, or an ablation (no-classifier, no-discriminator, no-hint).
    #[arg(long, default_value = "segan")]
    pub method: Method,
    /// MCAR deletion rate applied before the holdout split.
    #[arg(long, value_parser = open_unit)]
    pub mcar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: Experiment,
    #[arg(long, default_value = "segan")]
    pub method: Method,
    /// Comma-separated ascending rates in (0, 1).
    #[arg(long, value_delimiter = ',', value_parser = open_unit, default_values_t = DEFAULT_RATES)]
    pub rates: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: Experiment,
    #[arg(long, value_parser = open_unit)]
    pub mcar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DownstreamArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub experiment: Experiment,
    #[arg(long, default_value = "segan")]
    pub method: Method,
    /// classification (uses --label-col) or regression (uses --target-col).
    #[arg(long)]
    pub task: Task,
    /// Numeric column to predict in regression; it is withheld from the imputer.
    #[arg(long)]
    pub target_col: Option<String>,
    #[arg(long, value_parser = open_unit)]
    pub mcar: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn checked(s: &str, ok: impl Fn(f64) -> bool, range: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if ok(v) {
        Ok(v)
    } else {
        Err(format!("must lie in {range}"))
    }
}

fn positive_rate(s: &str) -> std::result::Result<f64, String> {
    checked(s, |v| v > 0.0 && v.is_finite(), "(0, inf)")
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    checked(s, |v| v >= 0.0 && v.is_finite(), "[0, inf)")
}

fn half_open_unit(s: &str) -> std::result::Result<f64, String> {
    checked(s, |v| (0.0..1.0).contains(&v), "[0, 1)")
}

fn closed_unit(s: &str) -> std::result::Result<f64, String> {
    checked(s, |v| (0.0..=1.0).contains(&v), "[0, 1]")
}

fn left_open_unit(s: &str) -> std::result::Result<f64, String> {
    checked(s, |v| v > 0.0 && v <= 1.0, "(0, 1]")
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    checked(s, |v| v > 0.0 && v < 1.0, "(0, 1)")
}

/// Reads a config file: a flat JSON object of [`TrainConfig`] fields.
pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SeganError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| SeganError::Config(format!("{}: {e}", path.display())))
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(common: &Common, seed: Option<u64>) -> Result<TrainConfig> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = common.lr {
        config.learning_rate = v;
    }
    if let Some(v) = common.epochs {
        config.epochs = v as usize;
    }
    if let Some(v) = common.batch {
        config.batch_size = v as usize;
    }
    if let Some(v) = common.dropout {
        config.dropout_rate = v;
    }
    if let Some(v) = common.hint_rate {
        config.hint_rate = v;
    }
    if let Some(v) = common.label_rate {
        config.label_rate = v;
    }
    if let Some(v) = common.alpha {
        config.alpha = v;
    }
    if let Some(v) = common.beta {
        config.beta = v;
    }
    if let Some(v) = seed {
        config.seed = v;
    }
    if common.label_col.is_none() {
        config.beta = 0.0;
    }
    config.validate()?;
    Ok(config)
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(|e| SeganError::io(path, e))
}

/// Builds a plan. `seeds: None` means a single run at the config's seed.
fn plan(
    common: &Common,
    seed: Option<u64>,
    seeds: Option<Vec<u64>>,
    jobs: u64,
    kind: PlanKind,
) -> Result<Plan> {
    let config = resolve_config(common, seed)?;
    let seeds = seeds.unwrap_or_else(|| vec![config.seed]);
    if seeds.is_empty() {
        return Err(SeganError::Config("--seeds needs at least one seed".into()));
    }
    Ok(Plan {
        kind,
        input: absolute(&common.input)?,
        label_col: common.label_col.clone(),
        out: absolute(&common.out)?,
        config,
        seeds,
        jobs: jobs as usize,
    })
}

impl Command {
    /// Resolves flags into a plan; `None` for `replay`.
    pub fn into_plan(self) -> Result<Option<Plan>> {
        let p = match self {
            Command::Impute(a) => {
                let model = a.model.as_deref().map(absolute).transpose()?;
                plan(&a.common, a.seed, None, 1, PlanKind::Impute { model })?
            }
            Command::Eval(a) => plan(
                &a.common,
                None,
                Some(a.experiment.seeds),
                a.experiment.jobs,
                PlanKind::Eval {
                    method: a.method,
                    mcar: a.mcar,
                },
            )?,
            Command::Sweep(a) => plan(
                &a.common,
                None,
                Some(a.experiment.seeds),
                a.experiment.jobs,
                PlanKind::Sweep {
                    method: a.method,
                    rates: a.rates,
                },
            )?,
            Command::Ablate(a) => plan(
                &a.common,
                None,
                Some(a.experiment.seeds),
                a.experiment.jobs,
                PlanKind::Ablate { mcar: a.mcar },
            )?,
            Command::Downstream(a) => {
                match a.task {
                    Task::Classification if a.common.label_col.is_none() => {
                        return Err(SeganError::Config(
                            "--task classification needs --label-col".into(),
                        ))
                    }
                    Task::Regression if a.target_col.is_none() => {
                        return Err(SeganError::Config(
                            "--task regression needs --target-col".into(),
                        ))
                    }
                    _ => {}
                }
                plan(
                    &a.common,
                    None,
                    Some(a.experiment.seeds),
                    a.experiment.jobs,
                    PlanKind::Downstream {
                        method: a.method,
                        task: a.task,
                        target_col: a.target_col,
                        mcar: a.mcar,
                    },
                )?
            }
            Command::Replay(_) => return Ok(None),
        };
        Ok(Some(p))
    }
}

/// Parses `args` and runs the command. `Ok(false)` means some cell failed.
pub fn run_from<I, T>(args: I) -> Result<bool>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    match cli.command {
        Command::Replay(r) => commands::replay(&r.manifest, r.out.as_deref()),
        other => {
            let plan = other
                .into_plan()?
                .expect("non-replay command yields a plan");
            Ok(execute(&plan)?.all_ok())
        }
    }
}

/// Entry point for the binary: parses the process arguments.
pub fn run() -> Result<bool> {
    run_from(std::env::args_os())
}
