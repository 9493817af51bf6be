use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn toy(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus/toys").join(format!("{name}.bench"));
    p.to_str().unwrap().to_string()
}

fn epp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epp")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn analyze_and_defaults() {
    let rows = csv_rows(&stdout(&epp(&["analyze", &toy("and")])));
    assert_eq!(rows[0], ["name", "r_seu", "p_latched", "p_sensitized", "ser", "status"]);
    assert_eq!(rows[1], ["A", "1.0", "1.0", "0.5", "0.5", "analyzed"]);
    assert_eq!(rows[3][3], "1.0");
}

#[test]
fn analyze_json_matches_csv() {
    let csv = csv_rows(&stdout(&epp(&["analyze", &toy("c17"), "--format", "csv"])));
    let json: Value = serde_json::from_str(&stdout(&epp(&["analyze", &toy("c17"), "--format", "json"]))).unwrap();
    assert_eq!(json["circuit"], "c17");
    assert_eq!(json["sp_method"], "independent");
    assert_eq!(json["aggregation_mode"], "any");
    let nodes = json["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), csv.len() - 1);
    for (node, row) in nodes.iter().zip(&csv[1..]) {
        assert_eq!(node["name"], row[0].as_str());
        assert_eq!(node["p_sensitized"].to_string(), row[3]);
        assert_eq!(node["ser"].to_string(), row[4]);
    }
    let total: f64 = nodes.iter().map(|n| n["ser"].as_f64().unwrap()).sum();
    assert!((json["total_ser"].as_f64().unwrap() - total).abs() < 1e-12);
}

#[test]
fn site_filter_marks_the_rest_skipped() {
    let rows = csv_rows(&stdout(&epp(&["analyze", &toy("and"), "--sites", "B"])));
    assert_eq!(rows[1], ["A", "1.0", "1.0", "", "", "skipped"]);
    assert_eq!(rows[2], ["B", "1.0", "1.0", "0.5", "0.5", "analyzed"]);
    assert_eq!(rows[3][5], "skipped");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(epp(&["analyze", &toy("and"), "--sp-method", "bdd"]).status.code(), Some(2));
    assert_eq!(epp(&["analyze", &toy("and"), "--sites", "Nope"]).status.code(), Some(2));
    assert_eq!(epp(&["analyze", &toy("and"), "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(epp(&["simulate", &toy("and"), "--vectors", "0"]).status.code(), Some(2));
    assert_eq!(epp(&["compare", &toy("and")]).status.code(), Some(2));
    assert_eq!(epp(&["analyze", &toy("and"), "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(epp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let out = epp(&["analyze", "/nonexistent.bench"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"input_sp": {"B": 1.0}, "default_r_seu": 2.0, "p_latched": {"A": 0.5}, "aggregation": "max"}"#,
    );
    let rows = csv_rows(&stdout(&epp(&["analyze", &toy("and"), "--config", &cfg])));
    // B is stuck at 1, so a flip at A always reaches Y
    assert_eq!(rows[1], ["A", "2.0", "0.5", "1.0", "1.0", "analyzed"]);
    assert_eq!(rows[2], ["B", "2.0", "1.0", "0.5", "1.0", "analyzed"]);

    let bad = write(dir.path(), "bad.json", r#"{"input_sp": {"Y": 0.3}}"#);
    let out = epp(&["analyze", &toy("and"), "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`Y`"));
    let unknown = write(dir.path(), "unknown.json", r#"{"vector": 10}"#);
    assert_eq!(epp(&["analyze", &toy("and"), "--config", &unknown]).status.code(), Some(2));

    let seeded = write(dir.path(), "seeded.json", r#"{"seed": 4, "vectors": 256}"#);
    let from_file = stdout(&epp(&["simulate", &toy("majority"), "--config", &seeded]));
    let from_flags = stdout(&epp(&["simulate", &toy("majority"), "--seed", "4", "--vectors", "256"]));
    assert_eq!(from_file, from_flags);
    let overridden = stdout(&epp(&["simulate", &toy("majority"), "--config", &seeded, "--seed", "5"]));
    assert_ne!(from_file, overridden);
}

#[test]
fn simulate_xor_always_propagates() {
    for seed in ["0", "17", "123456789"] {
        let rows = csv_rows(&stdout(&epp(&["simulate", &toy("xor"), "--seed", seed, "--vectors", "1000"])));
        assert_eq!(rows[0], ["site_name", "method", "vectors", "any_output", "Y"]);
        for row in &rows[1..] {
            assert_eq!(row[1..], ["montecarlo", "1000", "1.0", "1.0"]);
        }
    }
}

#[test]
fn simulate_exact_is_exhaustive() {
    let rows = csv_rows(&stdout(&epp(&["simulate", &toy("majority"), "--sp-method", "exact", "--sites", "A"])));
    assert_eq!(rows[1], ["A", "exhaustive", "8", "0.5", "0.5"]);
    let rows = csv_rows(&stdout(&epp(&["simulate", &toy("reconvergent"), "--sp-method", "exact", "--sites", "S"])));
    assert_eq!(rows[1][3], "0.0");
}

#[test]
fn exhaustive_input_bound() {
    let dir = tempfile::tempdir().unwrap();
    let wide = dir.path().join("wide.bench");
    let wide = wide.to_str().unwrap();
    stdout(&epp(&["generate", "dag", "--inputs", "25", "--gates", "30", "--out", wide]));
    let out = epp(&["simulate", wide, "--sp-method", "exact"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at most 24"));
    assert_eq!(epp(&["compare", wide, "--sp-method", "exact"]).status.code(), Some(1));
}

#[test]
fn fixed_seed_is_byte_identical() {
    let args = ["simulate", &toy("c17"), "--seed", "99", "--vectors", "5000"];
    let a = epp(&args);
    let b = epp(&args);
    assert_eq!(stdout(&a), stdout(&b));
    let c = epp(&["simulate", &toy("c17"), "--seed", "99", "--vectors", "5000", "--jobs", "3"]);
    assert_eq!(stdout(&a), stdout(&c));
}

#[test]
fn compare_trees_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["1", "2", "3"] {
        let tree = dir.path().join(format!("tree{seed}.bench"));
        let tree = tree.to_str().unwrap();
        stdout(&epp(&["generate", "tree", "--seed", seed, "--out", tree]));
        let out = dir.path().join("cmp.json");
        let out = out.to_str().unwrap();
        stdout(&epp(&["compare", tree, "--sp-method", "exact", "--format", "json", "--out", out]));
        let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
        assert_eq!(v["summary"]["reference"], "exhaustive");
        assert!(v["summary"]["mean_abs_diff"].as_f64().unwrap() < 1e-9);
        assert!(v["summary"]["max_abs_diff_per_output"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn compare_deterministic_inputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "stuck.json", r#"{"input_sp": {"A": 1.0, "B": 0.0, "C": 1.0}}"#);
    let out = dir.path().join("cmp.csv");
    let out = out.to_str().unwrap();
    stdout(&epp(&["compare", &toy("majority"), "--config", &cfg, "--vectors", "1", "--out", out]));
    let rows = csv_rows(&fs::read_to_string(out).unwrap());
    assert_eq!(rows[0], ["site_name", "analytical_any", "analytical_max", "simulated", "abs_diff", "rel_diff"]);
    for row in &rows[1..] {
        assert_eq!(row[4], "0.0", "{row:?}");
    }
    let summary: Value = serde_json::from_str(&fs::read_to_string(format!("{out}.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mean_abs_diff"], 0.0);
    assert_eq!(summary["vectors"], 1);
    for method in ["independent", "montecarlo", "exact"] {
        assert!(summary["by_sp_method"][method].is_object(), "{method}");
    }
    let timing: Value = serde_json::from_str(&fs::read_to_string(format!("{out}.timing.json")).unwrap()).unwrap();
    assert!(timing["analytical_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sp_subcommand() {
    let rows = csv_rows(&stdout(&epp(&["sp", &toy("and")])));
    assert_eq!(rows, [["net_name", "sp"], ["A", "0.5"], ["B", "0.5"], ["Y", "0.25"]]);
    let rows = csv_rows(&stdout(&epp(&["sp", &toy("reconvergent"), "--sp-method", "exact"])));
    assert_eq!(rows[4], ["Y", "0.0"]);
    let rows = csv_rows(&stdout(&epp(&["sp", &toy("reconvergent")])));
    assert_eq!(rows[4], ["Y", "0.25"]);
}

#[test]
fn generate_round_trips() {
    let text = stdout(&epp(&["generate", "dag", "--seed", "5", "--dffs", "2", "--name", "g"]));
    let n = epp_cli::parse_bench(&text, "g").unwrap();
    assert_eq!(n.logic_gate_count(), 40);
    assert_eq!(n.ff_outputs().len(), 2);
    assert_eq!(epp_cli::emit_bench(&n), text);
}
