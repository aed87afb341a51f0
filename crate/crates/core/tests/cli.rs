use std::path::Path;
use std::process::Command;

use payload_te::cli::{main_with, EXIT_INFEASIBLE, EXIT_OK, EXIT_PARSE, EXIT_USAGE, EXIT_VALIDATION};
use payload_te::scenario::{Mode, Scenario};
use tempfile::TempDir;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["payload-te"];
    argv.extend_from_slice(args);
    let code = main_with(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write_config(dir: &TempDir, name: &str, s: &Scenario) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, s.to_config_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn quick(mut s: Scenario) -> Scenario {
    s.horizon_s = 0.02;
    s.reps = 3;
    s
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn solve_default_preset_succeeds() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &Scenario::reference_preset(1_000_000, 10e9, 30e3));
    let table = p(&dir, "routing.txt");
    let o = run(&["solve", "--config", &cfg, "--out", &table, "--format", "json"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    assert!(v["objective_bps"].as_f64().unwrap() > 0.0);
    assert_eq!(v["residual_bps"].as_array().unwrap().len(), 64);
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.lines().filter(|l| !l.starts_with('#')).all(|l| l.starts_with("commodity ")));
}

#[test]
fn tiny_links_are_infeasible_with_a_cut_hint() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &Scenario::reference_preset(1_000_000, 1e3, 30e3));
    let o = run(&["solve", "--config", &cfg, "--out", &p(&dir, "r.txt")]);
    assert_eq!(o.code, EXIT_INFEASIBLE);
    assert!(o.stderr.contains("cannot be routed"), "{}", o.stderr);
    assert!(o.stderr.contains("outgoing capacity"), "{}", o.stderr);
}

#[test]
fn malformed_config_reports_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "graph.rows = 4\nthis is not a pair\n").unwrap();
    let o = run(&["validate", "--config", &cfg.to_string_lossy()]);
    assert_eq!(o.code, EXIT_PARSE);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);
}

#[test]
fn validation_failures_list_every_violation() {
    let dir = TempDir::new().unwrap();
    let mut s = Scenario::reference_preset(0, 10e9, -1.0);
    s.reps = 1;
    let cfg = write_config(&dir, "s.cfg", &s);
    let o = run(&["validate", "--config", &cfg]);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.stderr.contains("nonpositive rate: lambda_pps"), "{}", o.stderr);
    assert!(o.stderr.contains("buffer_pkts"), "{}", o.stderr);
    assert!(o.stderr.contains("reps = 1"), "{}", o.stderr);
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(o.code, EXIT_VALIDATION);
}

#[test]
fn solve_then_run_equals_inline_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &quick(Scenario::reference_preset(10_000, 1e9, 60e3)));
    let table = p(&dir, "routing.txt");
    assert_eq!(run(&["solve", "--config", &cfg, "--out", &table]).code, EXIT_OK);
    let two_stage = run(&["run", "--config", &cfg, "--routing", &table, "--seed", "11"]);
    let inline = run(&["run", "--config", &cfg, "--seed", "11"]);
    assert_eq!(two_stage.code, EXIT_OK, "{}", two_stage.stderr);
    assert_eq!(two_stage.stdout, inline.stdout);
    let j1 = run(&["run", "--config", &cfg, "--routing", &table, "--format", "json"]);
    let j2 = run(&["run", "--config", &cfg, "--format", "json"]);
    assert_eq!(j1.stdout, j2.stdout);
}

#[test]
fn run_appends_csv_with_single_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &quick(Scenario::baseline_single(8, &Scenario::reference_preset(10_000, 10e9, 90e3))));
    let csv = p(&dir, "out.csv");
    for _ in 0..2 {
        let o = run(&["run", "--config", &cfg, "--out", &csv]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], payload_te::queuesim::csv_header());
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert_eq!(lines.iter().filter(|l| l.starts_with("scenario_id")).count(), 1);
    // utilisation 0.9 with a large buffer: essentially no loss
    for l in &lines[1..] {
        let pli: f64 = l.split(',').nth(6).unwrap().parse().unwrap();
        assert!(pli < 0.5, "{l}");
    }
}

#[test]
fn routing_table_for_other_endpoints_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = Scenario::reference_preset(10_000, 10e9, 30e3);
    let mut b = quick(a.clone());
    if let payload_te::scenario::CommoditySpec::Generated { placement_seed, .. } = &mut b.commodities {
        *placement_seed = 99;
    }
    let cfg_a = write_config(&dir, "a.cfg", &a);
    let cfg_b = write_config(&dir, "b.cfg", &b);
    let table = p(&dir, "routing.txt");
    assert_eq!(run(&["solve", "--config", &cfg_a, "--out", &table]).code, EXIT_OK);
    let o = run(&["run", "--config", &cfg_b, "--routing", &table]);
    assert_eq!(o.code, EXIT_VALIDATION, "{}", o.stderr);
}

#[test]
fn sweep_emits_one_row_per_value_in_order() {
    let dir = TempDir::new().unwrap();
    let mut s = quick(Scenario::reference_preset(10_000, 10e9, 30e3));
    s.mode = Mode::Baseline;
    let cfg = write_config(&dir, "s.cfg", &s);
    let o = run(&["sweep", "--config", &cfg, "--dim", "lambda", "--values", "60000,30000,90000", "--reps", "2"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let lines: Vec<&str> = o.stdout.lines().collect();
    assert_eq!(lines[0], payload_te::cli::sweep_header());
    let values: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values, ["60000", "30000", "90000"]);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &quick(Scenario::reference_preset(10_000, 10e9, 30e3)));
    let out = p(&dir, "sweep.csv");
    let o = run(&["sweep", "--config", &cfg, "--dim", "link_rate", "--values", "1000,10e9", "--reps", "2", "--out", &out]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].contains("error:"), "{}", rows[0]);
    assert!(rows[1].ends_with(",ok"), "{}", rows[1]);
}

#[test]
fn empty_sweep_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &quick(Scenario::reference_preset(10_000, 10e9, 30e3)));
    let o = run(&["sweep", "--config", &cfg, "--dim", "buffer", "--values"]);
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.stderr.contains("empty"), "{}", o.stderr);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(run(&["run"]).code, EXIT_USAGE);
    assert_eq!(run(&["sweep", "--config", "x", "--dim", "colour"]).code, EXIT_USAGE);
}

#[test]
fn missing_file_is_a_runtime_error() {
    let o = run(&["validate", "--config", "/nonexistent/scenario.cfg"]);
    assert_eq!(o.code, payload_te::cli::EXIT_RUNTIME);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_payload-te");
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "s.cfg", &Scenario::reference_preset(10_000, 10e9, 30e3));
    let ok = Command::new(bin).args(["validate", "--config", &cfg]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("ok"));
    let bad = Command::new(bin).args(["validate", "--config"]).arg(Path::new("/nonexistent")).output().unwrap();
    assert_ne!(bad.status.code(), Some(EXIT_OK));
    assert!(!bad.stderr.is_empty());
}
