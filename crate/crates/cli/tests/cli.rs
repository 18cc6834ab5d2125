use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn qstrat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qstrat"))
        .args(args)
        .env_remove("QSTRAT_SEED")
        .output()
        .expect("run qstrat")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sample_is_reproducible() {
    let args = [
        "sample", "--dist", "uniform", "--m", "5", "--method", "qs", "--seed", "7",
    ];
    let a = stdout(&qstrat(&args));
    let b = stdout(&qstrat(&args));
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "index,layer,block,uniform,value");
    assert_eq!(lines.len(), 6);
    let mut blocks: Vec<usize> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    blocks.sort_unstable();
    assert_eq!(blocks, vec![1, 2, 3, 4, 5]);
    let other = stdout(&qstrat(&[
        "sample", "--dist", "uniform", "--m", "5", "--method", "qs", "--seed", "8",
    ]));
    assert_ne!(a, other);
}

#[test]
fn seed_from_environment() {
    let flag = stdout(&qstrat(&["sample", "--m", "4", "--seed", "99"]));
    let env = Command::new(env!("CARGO_BIN_EXE_qstrat"))
        .args(["sample", "--m", "4"])
        .env("QSTRAT_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(stdout(&env), flag);
}

#[test]
fn layer_mismatch_is_a_validation_error() {
    let out = qstrat(&[
        "sample", "--m", "30", "--method", "lqs", "--layers", "18,9,4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let out = qstrat(&[
        "sample", "--m", "30", "--method", "lqs", "--layers", "18,0,12",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = qstrat(&["sample", "--m", "3", "--dist", "beta", "--params", "2,-1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qstrat(&["sample"]);
    assert_eq!(out.status.code(), Some(1));
    let out = qstrat(&[
        "experiment",
        "--kind",
        "spacing_check",
        "--m",
        "10",
        "--ell",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(qstrat(&["--help"]).status.code(), Some(0));
    assert_eq!(qstrat(&["sample", "--help"]).status.code(), Some(0));
}

#[test]
fn theory_reports_layered_correlation() {
    let doc: Value = serde_json::from_str(&stdout(&qstrat(&[
        "theory", "--m", "30", "--layers", "18,9,3",
    ])))
    .unwrap();
    let corr = doc["lqs_uniform_moments"]["pair_correlation"]
        .as_f64()
        .unwrap();
    assert_eq!(format!("{corr:.8}"), "-0.03390805");
    assert!((doc["adj_factor"].as_f64().unwrap() - 885.0 / 899.0).abs() < 1e-15);
    assert_eq!(doc["order_statistics"].as_array().unwrap().len(), 30);

    let doc: Value = serde_json::from_str(&stdout(&qstrat(&[
        "theory", "--m", "10", "--k", "3", "--ell", "3", "--phi", "0.3",
    ])))
    .unwrap();
    assert_eq!(doc["spacing"]["iid"]["kind"]["kind"], "beta_law");
    assert!((doc["spacing"]["qs"]["variance"].as_f64().unwrap() - 1.0 / 600.0).abs() < 1e-15);
    assert!(
        (doc["order_statistics"][0]["mse"]["qs_p_k_star"]
            .as_f64()
            .unwrap()
            - 1.0 / 1200.0)
            .abs()
            < 1e-15
    );
    assert!(doc["asymptotic"]["mse"]["r"].is_number());
}

#[test]
fn out_files_match_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let args = [
        "sample", "--dist", "gamma", "--params", "2,5", "--m", "12", "--method", "lqs", "--layers",
        "6,4,2", "--format", "json", "--seed", "3",
    ];
    let printed = stdout(&qstrat(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(stdout(&qstrat(&with_out)).is_empty());
    let written = fs::read_to_string(&path).unwrap();
    assert_eq!(written, printed);
    let doc: Value = serde_json::from_str(&written).unwrap();
    assert_eq!(doc["values"].as_array().unwrap().len(), 12);
}

#[test]
fn experiment_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("grid.csv");
    fs::write(&cfg, r#"{"experiment": "mse_grid", "m": 20, "seed": 1}"#).unwrap();
    let res = qstrat(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "target,m,k,mse_iid,mse_qs,log_diff,sign"
    );
    assert_eq!(csv.lines().count(), 421);

    fs::write(&cfg, r#"{"experiment": "mse_grid", "bogus": 1}"#).unwrap();
    let res = qstrat(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}
