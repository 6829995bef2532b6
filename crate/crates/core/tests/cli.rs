//! End-to-end runs of the `segan` binary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segan::data::{write_csv, RawTable};
use segan::synthetic::{correlated_gaussian, LABEL_COLUMN};
use serde_json::Value;
use tempfile::TempDir;

const FAST: [&str; 4] = ["--epochs", "2", "--batch", "64"];

fn segan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segan"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = segan(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Synthetic CSV with about 15% of feature cells and a few labels blanked.
fn fixture(dir: &TempDir) -> String {
    let mut table = correlated_gaussian(200, 4, 3).to_table();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for row in table.rows.iter_mut() {
        for cell in row.iter_mut().take(4) {
            if rng.random::<f64>() < 0.15 {
                *cell = None;
            }
        }
        if rng.random::<f64>() < 0.1 {
            row[4] = None;
        }
    }
    write(dir, "data.csv", &table)
}

fn write(dir: &TempDir, name: &str, table: &RawTable) -> String {
    let path = dir.path().join(name);
    write_csv(&path, table).unwrap();
    path.to_str().unwrap().to_string()
}

fn out_path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn with<'a>(base: &[&'a str], input: &'a str, out: &'a Path) -> Vec<&'a str> {
    let mut args = base.to_vec();
    args.extend(["--input", input, "--out", out.to_str().unwrap()]);
    args.extend(FAST);
    args
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn manifest(out: &Path) -> Value {
    let text = std::fs::read_to_string(segan::cli::manifest_path(out)).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn impute_fills_every_cell() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "filled.csv");
    ok(&with(
        &["impute", "--label-col", LABEL_COLUMN],
        &input,
        &out,
    ));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(reader.headers().unwrap().len(), 5);
    let mut rows = 0;
    for row in reader.records() {
        let row = row.unwrap();
        assert!(row.iter().all(|c| !c.is_empty()), "{row:?}");
        assert!(row[4].starts_with('c'));
        rows += 1;
    }
    assert_eq!(rows, 200);
    assert!(segan::cli::model_path(&out).exists());
}

#[test]
fn impute_keeps_observed_text() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "filled.csv");
    ok(&with(&["impute"], &input, &out));
    let original: Vec<csv::StringRecord> = csv::Reader::from_path(&input)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect();
    let filled: Vec<csv::StringRecord> = csv::Reader::from_path(&out)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect();
    for (a, b) in original.iter().zip(&filled) {
        for (x, y) in a.iter().zip(b.iter()) {
            if !x.is_empty() {
                assert_eq!(x, y);
            }
        }
    }
}

#[test]
fn missing_label_column_disables_classifier() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "eval.jsonl");
    ok(&with(
        &["eval", "--seeds", "1", "--beta", "2"],
        &input,
        &out,
    ));
    assert_eq!(manifest(&out)["config"]["beta"], 0.0);
    assert!(records(&out).iter().all(|r| r["config"]["beta"] == 0.0));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let a = out_path(&dir, "a.jsonl");
    let b = out_path(&dir, "b.jsonl");
    let base = [
        "eval",
        "--label-col",
        LABEL_COLUMN,
        "--seeds",
        "1,2",
        "--mcar",
        "0.2",
    ];
    ok(&with(&base, &input, &a));
    ok(&with(&base, &input, &b));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "filled.csv");
    let again = out_path(&dir, "again.csv");
    ok(&with(
        &["impute", "--label-col", LABEL_COLUMN, "--seed", "4"],
        &input,
        &out,
    ));
    let m = segan::cli::manifest_path(&out);
    ok(&[
        "replay",
        "--manifest",
        m.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(
        std::fs::read(segan::cli::model_path(&out)).unwrap(),
        std::fs::read(segan::cli::model_path(&again)).unwrap()
    );
}

#[test]
fn manifest_records_resolved_plan() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let config = dir.path().join("cfg.json");
    std::fs::write(&config, r#"{"hint_rate": 0.6, "epochs": 5}"#).unwrap();
    let out = out_path(&dir, "eval.jsonl");
    let mut args = with(
        &[
            "eval",
            "--seeds",
            "2,3",
            "--config",
            config.to_str().unwrap(),
        ],
        &input,
        &out,
    );
    args.extend(["--alpha", "0.2"]);
    ok(&args);
    let m = manifest(&out);
    assert_eq!(m["format"], "segan-manifest");
    assert_eq!(m["command"], "eval");
    assert_eq!(m["seeds"], serde_json::json!([2, 3]));
    // Flags override the file, which overrides the defaults.
    assert_eq!(m["config"]["epochs"], 2);
    assert_eq!(m["config"]["hint_rate"], 0.6);
    assert_eq!(m["config"]["alpha"], 0.2);
    assert_eq!(m["config"]["learning_rate"], 0.001);
    assert!(Path::new(m["input"].as_str().unwrap()).is_absolute());
}

#[test]
fn ablate_reports_four_variants() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "ablate.jsonl");
    ok(&with(
        &["ablate", "--label-col", LABEL_COLUMN, "--seeds", "1,2"],
        &input,
        &out,
    ));
    let recs = records(&out);
    let methods: BTreeSet<String> = recs
        .iter()
        .map(|r| r["method"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(methods.len(), 4, "{methods:?}");
    assert_eq!(recs.len(), 8);
    assert!(recs
        .iter()
        .all(|r| r["metric"] == "rmse" && r["value"].as_f64().unwrap() > 0.0));
}

#[test]
fn sweep_reports_each_rate() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "sweep.jsonl");
    ok(&with(&["sweep", "--seeds", "1"], &input, &out));
    let rates: Vec<f64> = records(&out)
        .iter()
        .map(|r| r["missing_rate"].as_f64().unwrap())
        .collect();
    assert_eq!(rates, vec![0.2, 0.4, 0.6, 0.8]);
}

#[test]
fn downstream_regression_reports_mae() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "down.jsonl");
    let base = [
        "downstream",
        "--task",
        "regression",
        "--target-col",
        "x1",
        "--seeds",
        "1,2",
        "--method",
        "mean",
    ];
    ok(&with(&base, &input, &out));
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert!(recs
        .iter()
        .all(|r| r["metric"] == "mae" && r["value"].as_f64().unwrap() >= 0.0));
}

#[test]
fn downstream_classification_needs_label_column() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "down.jsonl");
    let result = segan(&with(
        &["downstream", "--task", "classification"],
        &input,
        &out,
    ));
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("--label-col"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let config = dir.path().join("cfg.json");
    std::fs::write(&config, r#"{"epoch": 3}"#).unwrap();
    let out = out_path(&dir, "eval.jsonl");
    let result = segan(&with(
        &["eval", "--config", config.to_str().unwrap()],
        &input,
        &out,
    ));
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("unknown field"));
}

#[test]
fn out_of_range_flag_is_named() {
    let dir = TempDir::new().unwrap();
    let input = fixture(&dir);
    let out = out_path(&dir, "eval.jsonl");
    let result = segan(&with(&["eval", "--dropout", "1.5"], &input, &out));
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("--dropout"));
}

#[test]
fn failed_cells_exit_nonzero_and_are_recorded() {
    let dir = TempDir::new().unwrap();
    // One positive among 40 rows: most test splits hold a single class.
    let header = vec!["a".to_string(), "b".to_string(), "y".to_string()];
    let rows = (0..40)
        .map(|i| {
            vec![
                Some(format!("{}", i as f64 / 40.0)),
                if i % 7 == 0 {
                    None
                } else {
                    Some(format!("{}", (i * 3 % 11) as f64))
                },
                Some(if i == 0 { "pos" } else { "neg" }.to_string()),
            ]
        })
        .collect();
    let input = write(
        &dir,
        "skewed.csv",
        &RawTable::new(header, rows, Some("y")).unwrap(),
    );
    let out = out_path(&dir, "down.jsonl");
    let base = [
        "downstream",
        "--task",
        "classification",
        "--label-col",
        "y",
        "--method",
        "mean",
        "--seeds",
        "1,2,3",
    ];
    let result = segan(&with(&base, &input, &out));
    assert!(!result.status.success());
    let recs = records(&out);
    assert!(recs.iter().any(|r| r["error"].is_string()), "{recs:?}");
    assert!(manifest(&out)["failed_cells"].as_u64().unwrap() > 0);
}
