//! End-to-end tests of the `fpboost` binary: every subcommand, exit codes,
//! and byte-level determinism of file outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpboost"))
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Writes a small deterministic survival CSV where the observed time falls
/// steeply in the single feature, so a good model ranks subjects almost
/// perfectly.
fn write_monotone_csv(path: &Path, n: usize) {
    let mut rows = String::from("x,time,event\n");
    for i in 0..n {
        let x = i as f64 / n as f64;
        // jitter keeps times distinct without breaking the ordering
        let t = 2.0 * (-3.0 * x).exp() + 1e-4 * ((i * 7 % 13) as f64);
        rows.push_str(&format!("{x},{t},1\n"));
    }
    std::fs::write(path, rows).unwrap();
}

fn simulate(dir: &Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let out_str = out.to_str().unwrap().to_string();
    let args = [
        "simulate",
        "--n",
        &n.to_string(),
        "--heads",
        "2.0:1.0:0.7;0.5:2.5:0.6",
        "--censor-rate",
        "0.3",
        "--seed",
        &seed.to_string(),
        "--out",
        &out_str,
    ];
    assert_success(&run(&args));
    out
}

#[test]
fn fit_writes_model_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 50, 1);
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--n-weibull",
        "1",
        "--n-loglogistic",
        "0",
        "--estimators",
        "5",
        "--init",
        "km",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);
    assert!(dir.path().join("model.json").exists());
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 6); // header + 5 iterations
}

#[test]
fn same_seed_gives_byte_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 80, 2);
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        std::fs::create_dir_all(&out_dir).unwrap();
        let out = run(&[
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--n-weibull",
            "2",
            "--n-loglogistic",
            "1",
            "--estimators",
            "4",
            "--init",
            "km",
            "--seed",
            "7",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    let a = std::fs::read(dir.path().join("a/model.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/model.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 30, 3);
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--learning-rate",
        "0.0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("learning_rate"), "stderr: {stderr}");
}

#[test]
fn missing_model_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "test.csv", 20, 4);
    let out = run(&[
        "evaluate",
        "--model",
        dir.path().join("nope.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 60, 5);
    assert_success(&run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--n-weibull",
        "1",
        "--n-loglogistic",
        "0",
        "--estimators",
        "2",
        "--init",
        "km",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    // test file lacking the trained feature columns
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "other,time,event\n1.0,1.0,1\n2.0,2.0,0\n").unwrap();
    let out = run(&[
        "evaluate",
        "--model",
        dir.path().join("model.json").to_str().unwrap(),
        "--data",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn evaluate_recovers_strong_signal_and_table_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("monotone.csv");
    write_monotone_csv(&data, 60);
    assert_success(&run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--n-weibull",
        "1",
        "--n-loglogistic",
        "0",
        "--estimators",
        "150",
        "--max-depth",
        "3",
        "--learning-rate",
        "0.3",
        "--init",
        "km",
        "--seed",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let out = run(&[
        "evaluate",
        "--model",
        dir.path().join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--grid-points",
        "30",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let c_index = report["c_index"].as_f64().unwrap();
    assert!(c_index >= 0.95, "oracle-style pipeline reached only {c_index}");

    // the printed table holds the same numbers scaled by 100, 1 decimal
    let table = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    for (name, key) in [("c-index", "c_index"), ("ibs", "ibs"), ("c-td", "c_td"), ("auc", "auc")] {
        let line = table.lines().find(|l| l.starts_with(name)).unwrap();
        let shown: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        let expected = (report[key].as_f64().unwrap() * 1000.0).round() / 10.0;
        assert!(
            (shown - expected).abs() < 1e-9,
            "{name}: table {shown} vs json {expected}"
        );
    }
}

#[test]
fn predict_emits_full_grid_per_subject() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 40, 6);
    assert_success(&run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--n-weibull",
        "1",
        "--n-loglogistic",
        "0",
        "--estimators",
        "3",
        "--init",
        "km",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let curves = dir.path().join("curves.csv");
    assert_success(&run(&[
        "predict",
        "--model",
        dir.path().join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--times",
        "0,0.5,1.0",
        "--out",
        curves.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&curves).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 40 * 3);
    // every subject's first row is t = 0 with survival exactly 1
    for (row, line) in lines[1..].iter().enumerate() {
        if row % 3 == 0 {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[1], "0");
            assert_eq!(fields[2], "1");
        }
    }

    // the CSV is a thin wrapper: values equal the library predictions
    let model = fpboost::FPBoostModel::load(dir.path().join("model.json")).unwrap();
    let meta = model.preprocess().unwrap().clone();
    let (raw, _) = fpboost::data::load_csv_with_layout(&data, meta.layout.as_ref().unwrap()).unwrap();
    let test = fpboost::data::preprocess_apply(&meta, &raw).unwrap();
    let grid = [0.0, 0.5, 1.0];
    for (row, line) in lines[1..].iter().enumerate() {
        let subject = row / 3;
        let fields: Vec<&str> = line.split(',').collect();
        let shown: f64 = fields[2].parse().unwrap();
        let expected = model.predict_survival(test.feature_row(subject), &grid).unwrap()[row % 3];
        assert_eq!(shown, expected, "subject {subject} row {row}");
    }
}

#[test]
fn experiment_is_byte_deterministic_per_master_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 150, 7);
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        std::fs::create_dir_all(&out_dir).unwrap();
        let out = run(&[
            "experiment",
            "--data",
            data.to_str().unwrap(),
            "--n-weibull",
            "2",
            "--n-loglogistic",
            "0",
            "--estimators",
            "4",
            "--max-depth",
            "1",
            "--init",
            "km",
            "--n-seeds",
            "2",
            "--grid-points",
            "25",
            "--seed",
            "13",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    let a = std::fs::read(dir.path().join("a/summary.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/summary.json")).unwrap();
    assert_eq!(a, b);
    let summary: serde_json::Value = serde_json::from_slice(&a).unwrap();
    for key in ["c_index", "ibs", "c_td", "auc"] {
        assert!(summary[key]["mean"].is_number(), "missing {key}");
        assert!(summary[key]["ci95"].is_number());
        assert_eq!(summary[key]["per_seed"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn tune_writes_reusable_best_config_and_full_log() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "train.csv", 120, 8);
    // a small space keeps the smoke run quick
    let space = r#"{
        "n_weibull": {"start": 1, "end": 2},
        "n_loglogistic": {"start": 0, "end": 1},
        "n_estimators": {"start": 2, "end": 6},
        "max_depth_choices": [1],
        "activations": ["sigmoid"],
        "learning_rate": [0.1, 0.3],
        "alpha": [0.0, 0.1],
        "l1_ratio": [0.0, 1.0],
        "inits": ["km"],
        "patience_choices": [null],
        "min_leaf": 1
    }"#;
    let space_path = dir.path().join("space.json");
    std::fs::write(&space_path, space).unwrap();

    let out = run(&[
        "tune",
        "--data",
        data.to_str().unwrap(),
        "--trials",
        "3",
        "--seed",
        "5",
        "--space",
        space_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_success(&out);

    let log = std::fs::read_to_string(dir.path().join("trials.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);

    // the best config must be directly consumable by fit
    let refit = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--config",
        dir.path().join("best_config.json").to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        dir.path().join("refit").to_str().unwrap(),
    ]);
    assert_success(&refit);
    assert!(dir.path().join("refit/model.json").exists());
}
