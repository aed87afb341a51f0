use payload_te_web::{compare_json, solve_torus_json};
use serde_json::Value;

#[test]
fn solve_reports_every_edge_and_normalized_routes() {
    let v: Value = serde_json::from_str(&solve_torus_json(4, 4, 10e9, 60e3, 8).unwrap()).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 64);
    assert!(v["objective_bps"].as_f64().unwrap() > 0.0);
    let mut sums = [0.0f64; 8];
    for r in v["routes"].as_array().unwrap() {
        sums[r["commodity"].as_u64().unwrap() as usize] += r["probability"].as_f64().unwrap();
    }
    assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-6), "{sums:?}");
    for e in v["edges"].as_array().unwrap() {
        assert!(e["utilization"].as_f64().unwrap() <= 1.0 + 1e-9);
    }
}

#[test]
fn solve_surfaces_infeasibility_as_error() {
    assert!(solve_torus_json(4, 4, 1e3, 60e3, 8).is_err());
}

#[test]
fn compare_returns_both_modes() {
    let v: Value = serde_json::from_str(&compare_json(10_000, 10e9, 30e3, 2, 0.02, 2, 5).unwrap()).unwrap();
    assert!(v["proposed"]["mean_delay_s"].as_f64().unwrap() > 0.0);
    assert!(v["baseline"]["mean_delay_s"].as_f64().unwrap() > 0.0);
    assert_eq!(v["multiplier"], 2);
}
