//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero when any fails. Built with `harness = false`.

mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segan::data::{write_csv, DataMatrix, Dataset, MaskMatrix};
use segan::evaluation::{
    corrupt, downstream_pipeline, evaluate, sweep_missing_rate, EvalResult, Method,
    PredictorConfig, Protocol, Target, DEFAULT_SEEDS,
};
use segan::model::{
    classifier_loss, discriminator_forward, discriminator_loss, reconstruction_loss, sample_hint,
    SeganModel, Variant,
};
use segan::numerics::Matrix;
use segan::synthetic::{correlated_gaussian, separable_task, LABEL_COLUMN};
use segan::training::{impute, impute_with_seed, train};
use segan::TrainConfig;

use common::suite::{
    classifier_objective_report, discriminator_objective_report, generator_objective_report,
    kinks_acceptable, random_network_case, LAYER_BOUND, OBJECTIVE_BOUND,
};

const MCAR: f64 = 0.3;
const TREND_SLACK: f64 = 0.005;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn synthetic() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| correlated_gaussian(2000, 8, 42).dataset())
}

fn score(method: Method, rate: f64) -> EvalResult {
    evaluate(
        synthetic(),
        &TrainConfig::default(),
        method,
        &DEFAULT_SEEDS,
        &Protocol::with_mcar(rate),
    )
    .expect("evaluation")
}

fn full_at_mcar() -> &'static EvalResult {
    static R: OnceLock<EvalResult> = OnceLock::new();
    R.get_or_init(|| score(Method::Segan(Variant::Full), MCAR))
}

fn gradient_suite() -> Verdict {
    let mut worst_layer: f64 = 0.0;
    let mut kinks_ok = true;
    for seed in 0..20 {
        let r = random_network_case(seed);
        kinks_ok &= kinks_acceptable(&r);
        worst_layer = worst_layer.max(r.max_rel_error);
    }
    let mut worst_objective: f64 = 0.0;
    for r in [
        generator_objective_report(),
        discriminator_objective_report(),
        classifier_objective_report(),
    ] {
        kinks_ok &= kinks_acceptable(&r);
        worst_objective = worst_objective.max(r.max_rel_error);
    }
    verdict(
        kinks_ok && worst_layer < LAYER_BOUND && worst_objective < OBJECTIVE_BOUND,
        format!("layers max rel err {worst_layer:.2e}, objectives {worst_objective:.2e}"),
    )
}

fn mask_preservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    for case in 0..1000 {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(1..=20);
        let rate: f64 = rng.random();
        let mask = MaskMatrix::from_fn(d, n, |_, _| rng.random::<f64>() >= rate);
        let x = Matrix::from_fn(d, n, |_, _| rng.random());
        let data = DataMatrix::new(x, &mask).unwrap();
        let truth = data.as_matrix().clone();
        let ds = Dataset::new(data, mask.clone(), None).unwrap();
        let config = TrainConfig {
            hidden_width: 8,
            beta: 0.0,
            ..TrainConfig::default()
        };
        let model = SeganModel::new(d, None, &config, Variant::Full, &mut rng).unwrap();
        let out = impute_with_seed(&model, &ds, case).unwrap();
        for r in 0..d {
            for c in 0..n {
                if mask.is_observed(r, c)
                    && out.as_matrix().get(r, c).to_bits() != truth.get(r, c).to_bits()
                {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0,
        format!("{violations} changed observed entries over 1000 instances"),
    )
}

fn hint_law() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mask = MaskMatrix::from_fn(100, 100, |_, _| rng.random::<f64>() < 0.6);
    let mut ok = true;
    let mut notes = Vec::new();
    for rate in [0.0, 0.5, 0.8, 1.0] {
        let hint = sample_hint(&mask, rate, &mut rng).unwrap();
        let m = mask.as_matrix();
        let mut table_ok = true;
        let mut half = 0usize;
        for ((&r, &k), &mv) in hint.r.values().iter().zip(hint.k.values()).zip(m.values()) {
            let expected = if k == 1.0 { mv } else { 0.5 };
            table_ok &= (k == 0.0 || k == 1.0) && r == expected;
            half += usize::from(r == 0.5);
        }
        let fraction = half as f64 / m.len() as f64;
        let within = (fraction - (1.0 - rate)).abs() <= 0.02;
        let exact = rate < 1.0 || hint.r == *m;
        ok &= table_ok && within && exact;
        notes.push(format!("h={rate}: R=0.5 frac {fraction:.3}"));
    }
    verdict(ok, notes.join(", "))
}

fn loss_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mask = Matrix::from_fn(5, 7, |_, _| f64::from(u8::from(rng.random::<bool>())));
    let ld = discriminator_loss(&mask, &Matrix::filled(5, 7, 0.5)).unwrap();
    let q = 3;
    let labels: Vec<Option<usize>> = (0..7)
        .map(|j| if j % 3 == 1 { None } else { Some(j % q) })
        .collect();
    let lc = classifier_loss(&labels, &Matrix::filled(q, 7, 1.0 / q as f64)).unwrap();
    let x = Matrix::from_fn(5, 7, |_, _| rng.random());
    let x_bar = Matrix::from_fn(5, 7, |_, _| rng.random());
    let same = reconstruction_loss(&x, &x, &mask).unwrap();
    let unobserved = reconstruction_loss(&x, &x_bar, &Matrix::zeros(5, 7)).unwrap();
    let ld_err = (ld - std::f64::consts::LN_2).abs();
    let lc_err = (lc - (q as f64).ln()).abs();
    verdict(
        ld_err < 1e-9 && lc_err < 1e-9 && same == 0.0 && unobserved == 0.0,
        format!("|L_D-ln2| {ld_err:.1e}, |L_C-ln q| {lc_err:.1e}, recon {same} / {unobserved}"),
    )
}

fn imputation_gain() -> Verdict {
    let mean = score(Method::ColumnMean, MCAR);
    let full = full_at_mcar();
    let gain = 1.0 - full.rmse / mean.rmse;
    verdict(
        gain >= 0.10 && full.failures.is_empty(),
        format!(
            "SEGAN {:.4} vs mean {:.4}, gain {:.1}%",
            full.rmse,
            mean.rmse,
            100.0 * gain
        ),
    )
}

fn ablation_trend() -> Verdict {
    let full = full_at_mcar().rmse;
    let mut ok = true;
    let mut notes = vec![format!("full {full:.4}")];
    for variant in [
        Variant::NoClassifier,
        Variant::NoDiscriminator,
        Variant::NoHint,
    ] {
        let r = score(Method::Segan(variant), MCAR);
        ok &= full <= r.rmse + TREND_SLACK;
        notes.push(format!("{} {:.4}", variant.label(), r.rmse));
    }
    verdict(ok, notes.join(", "))
}

fn missing_rate_trend() -> Verdict {
    let points = sweep_missing_rate(
        synthetic(),
        &TrainConfig::default(),
        Method::Segan(Variant::Full),
        &[0.2, 0.8],
        &DEFAULT_SEEDS,
        1,
    )
    .expect("sweep");
    let (low, high) = (points[0].1.rmse, points[1].1.rmse);
    verdict(low < high, format!("rate 0.2 {low:.4}, rate 0.8 {high:.4}"))
}

fn hint_equilibrium() -> Verdict {
    let seed = 1;
    let ds = corrupt(synthetic(), Some(MCAR), seed).unwrap();
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let (model, _) = train(&ds, &config).unwrap();
    let x_hat = impute(&model, &ds).unwrap();
    let hint = sample_hint(
        &ds.mask,
        config.hint_rate,
        &mut ChaCha8Rng::seed_from_u64(77),
    )
    .unwrap();
    let m_hat = discriminator_forward(&model, x_hat.as_matrix(), &hint.r).unwrap();
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for ((&p, &k), &m) in m_hat
        .values()
        .iter()
        .zip(hint.k.values())
        .zip(ds.mask.as_matrix().values())
    {
        let group = k as usize;
        totals[group] += 1;
        hits[group] += usize::from((p > 0.5) == (m == 1.0));
    }
    let unhinted = hits[0] as f64 / totals[0] as f64;
    let hinted = hits[1] as f64 / totals[1] as f64;
    verdict(
        hinted > 0.95 && (0.45..=0.70).contains(&unhinted),
        format!("hinted accuracy {hinted:.3}, unhinted {unhinted:.3}"),
    )
}

fn run_cli(bin: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    matches!((std::fs::read(a), std::fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_segan");
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let mut table = correlated_gaussian(240, 5, 11).to_table();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for row in table.rows.iter_mut() {
        for cell in row.iter_mut().take(5) {
            if rng.random::<f64>() < 0.15 {
                *cell = None;
            }
        }
    }
    write_csv(&input, &table).unwrap();
    let input = input.to_str().unwrap().to_string();
    let small = ["--epochs", "2", "--batch", "64"];
    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "impute",
            vec!["impute", "--label-col", LABEL_COLUMN, "--seed", "3"],
        ),
        (
            "eval",
            vec![
                "eval",
                "--label-col",
                LABEL_COLUMN,
                "--seeds",
                "1,2",
                "--mcar",
                "0.2",
            ],
        ),
        (
            "sweep",
            vec!["sweep", "--seeds", "1,2", "--rates", "0.2,0.5"],
        ),
        (
            "ablate",
            vec!["ablate", "--label-col", LABEL_COLUMN, "--seeds", "1,2"],
        ),
        (
            "downstream",
            vec![
                "downstream",
                "--label-col",
                LABEL_COLUMN,
                "--task",
                "classification",
                "--seeds",
                "1,2",
                "--mcar",
                "0.2",
            ],
        ),
        (
            "regression",
            vec![
                "downstream",
                "--task",
                "regression",
                "--target-col",
                "x0",
                "--seeds",
                "1",
            ],
        ),
    ];
    let mut failures = Vec::new();
    for (name, args) in runs {
        let ext = if name == "impute" { "csv" } else { "jsonl" };
        let out = dir.path().join(format!("{name}.{ext}"));
        let replayed = dir.path().join(format!("{name}.replay.{ext}"));
        let mut full: Vec<&str> = args.clone();
        full.extend(["--input", &input, "--out", out.to_str().unwrap()]);
        full.extend(small);
        let manifest = segan::cli::manifest_path(&out);
        let outcome = run_cli(bin, &full).and_then(|_| {
            run_cli(
                bin,
                &[
                    "replay",
                    "--manifest",
                    manifest.to_str().unwrap(),
                    "--out",
                    replayed.to_str().unwrap(),
                ],
            )
        });
        match outcome {
            Err(e) => failures.push(format!("{name}: {e}")),
            Ok(()) => {
                let mut identical = same_bytes(&out, &replayed);
                if name == "impute" {
                    identical &= same_bytes(
                        &segan::cli::model_path(&out),
                        &segan::cli::model_path(&replayed),
                    );
                }
                if !identical {
                    failures.push(format!("{name}: replay differs"));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        "impute, eval, sweep, ablate, downstream (both tasks) replay byte-identically".to_string()
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

fn downstream_sanity() -> Verdict {
    let set = separable_task(2000, 8, 7);
    let ds = set.dataset();
    let target = Target::Classes(set.labels.clone());
    let config = TrainConfig::default();
    let cfg = PredictorConfig::default();
    let run = |m| {
        downstream_pipeline(
            &ds,
            &target,
            m,
            &config,
            &DEFAULT_SEEDS,
            Some(MCAR),
            &cfg,
            1,
        )
        .unwrap()
    };
    let mean = run(Method::ColumnMean).auc.unwrap();
    let segan = run(Method::Segan(Variant::Full)).auc.unwrap();
    verdict(
        segan >= mean,
        format!("SEGAN AUC {segan:.4} vs mean {mean:.4}"),
    )
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let mins = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria = [
        Criterion {
            id: 1,
            name: "gradient suite",
            limit: Some(Duration::from_secs(10)),
            run: gradient_suite,
        },
        Criterion {
            id: 2,
            name: "mask preservation",
            limit: Some(Duration::from_secs(5)),
            run: mask_preservation,
        },
        Criterion {
            id: 3,
            name: "hint-matrix law",
            limit: Some(Duration::from_secs(1)),
            run: hint_law,
        },
        Criterion {
            id: 4,
            name: "loss identities",
            limit: None,
            run: loss_identities,
        },
        Criterion {
            id: 5,
            name: "imputation gain",
            limit: mins(5),
            run: imputation_gain,
        },
        Criterion {
            id: 6,
            name: "ablation trend",
            limit: mins(15),
            run: ablation_trend,
        },
        Criterion {
            id: 7,
            name: "missing-rate trend",
            limit: mins(15),
            run: missing_rate_trend,
        },
        Criterion {
            id: 8,
            name: "hint equilibrium",
            limit: None,
            run: hint_equilibrium,
        },
        Criterion {
            id: 9,
            name: "determinism",
            limit: None,
            run: determinism,
        },
        Criterion {
            id: 10,
            name: "downstream sanity",
            limit: mins(10),
            run: downstream_sanity,
        },
    ];
    let filter: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| filter.is_empty() || filter.contains(&c.id))
    {
        let started = Instant::now();
        let v = (c.run)();
        let elapsed = started.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed <= l);
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        let limit = c
            .limit
            .map(|l| format!(" (limit {}s)", l.as_secs()))
            .unwrap_or_default();
        println!(
            "[{}] {:>2} {}: {} [{:.1}s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
