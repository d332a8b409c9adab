use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "[income]\nn_states = 3\n\n[grid]\nn_nodes = 60\n";

fn engelgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engelgap"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn column(csv: &str, header: &str) -> Vec<String> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let heads: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = heads
        .iter()
        .position(|h| h.split('[').next() == Some(header))
        .unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "bad.toml", "[preferences]\nphi = \"high\"\n");
    let res = engelgap(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 3);
    assert!(!out.exists());
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(engelgap(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_file_is_io_error() {
    let res = engelgap(&["solve", "--config", "/nonexistent/engelgap.toml"]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn default_config_round_trips() {
    let res = engelgap(&["default-config"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(
        engelgap_cli::RunConfig::from_toml(&text).unwrap(),
        engelgap_cli::RunConfig::default()
    );
}

#[test]
fn undamaged_solve_prices_food_at_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let body = format!("{SMALL}\n[scenario]\nname = \"no-damage\"\n");
    let cfg = write_config(dir.path(), "nd.toml", &body);
    let res = engelgap(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("# config_hash="));
    let names = column(&summary, "quantity");
    let k = names.iter().position(|n| n == "food_price").unwrap();
    let p: f64 = column(&summary, "value")[k].parse().unwrap();
    assert!((p - 2.49).abs() < 1e-12, "p = {p}");
}

#[test]
fn self_comparison_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let body = format!("{SMALL}\n[scenario]\nname = \"no-damage\"\n");
    let cfg = write_config(dir.path(), "nd.toml", &body);
    let res = engelgap(&[
        "compare",
        "--config",
        &cfg,
        "--reference",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--no-plots",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    for v in column(&table, "change") {
        assert_eq!(v.parse::<f64>().unwrap(), 0.0);
    }
    assert!(!out.join("food_share_curve.svg").exists());
}

#[test]
fn mismatched_primitives_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "a.toml", SMALL);
    let b = write_config(
        dir.path(),
        "b.toml",
        &format!("{SMALL}\n[preferences]\nbeta = 0.97\n"),
    );
    let res = engelgap(&[
        "compare",
        "--config",
        &a,
        "--reference",
        &b,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(13));
}
