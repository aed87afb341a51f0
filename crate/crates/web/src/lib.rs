//! WebAssembly bindings for the browser demo.
//!
//! Each export takes plain numbers and returns a JSON string. The `*_json`
//! functions carry the logic so native tests can call them directly.

use payload_te::metrics::mm1k_blocking;
use payload_te::pipeline::{evaluate, optimize};
use payload_te::scenario::{CommoditySpec, GraphSpec, Scenario};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct EdgeView {
    from: usize,
    to: usize,
    capacity: f64,
    flow: f64,
    utilization: f64,
}

#[derive(Serialize)]
struct RouteView {
    commodity: usize,
    nodes: Vec<usize>,
    probability: f64,
}

#[derive(Serialize)]
struct SolveView {
    rows: usize,
    cols: usize,
    objective_bps: f64,
    bottleneck: Option<usize>,
    pivots: usize,
    endpoints: Vec<(usize, usize)>,
    edges: Vec<EdgeView>,
    routes: Vec<RouteView>,
    routing_text: String,
}

#[derive(Serialize)]
struct ModeView {
    mean_delay_s: Option<f64>,
    delay_half_width_s: Option<f64>,
    pli_pct: f64,
    pli_half_width_pct: f64,
}

#[derive(Serialize)]
struct CompareView {
    proposed: ModeView,
    baseline: ModeView,
    multiplier: u32,
}

#[derive(Serialize)]
struct CurvePoint {
    rho: f64,
    blocking: f64,
}

fn torus_scenario(rows: usize, cols: usize, link_rate_bps: f64, lambda_pps: f64, commodities: usize) -> Scenario {
    let mut s = Scenario::reference_preset(10_000, link_rate_bps, lambda_pps);
    s.graph = GraphSpec::Torus { rows, cols, link_rate_bps };
    if let CommoditySpec::Generated { count, .. } = &mut s.commodities {
        *count = commodities;
    }
    s
}

/// Solves the max-min LP on a torus and returns edge loads and routes.
pub fn solve_torus_json(rows: usize, cols: usize, link_rate_bps: f64, lambda_pps: f64, commodities: usize) -> Result<String, String> {
    let scenario = torus_scenario(rows, cols, link_rate_bps, lambda_pps, commodities);
    let opt = optimize(&scenario).map_err(|e| e.to_string())?;
    let edges = opt
        .graph
        .edges()
        .iter()
        .zip(&opt.solution.edge_flow)
        .map(|(e, &flow)| EdgeView { from: e.from, to: e.to, capacity: e.capacity, flow, utilization: flow / e.capacity })
        .collect();
    let routes = opt
        .table
        .commodities()
        .flat_map(|k| {
            opt.table.routes(k).unwrap_or_default().iter().map(move |r| RouteView {
                commodity: k,
                nodes: r.path.nodes().to_vec(),
                probability: r.probability,
            })
        })
        .collect();
    let view = SolveView {
        rows,
        cols,
        objective_bps: opt.solution.objective,
        bottleneck: opt.solution.bottleneck(),
        pivots: opt.solution.pivots,
        endpoints: opt.commodities.iter().map(|c| (c.source, c.destination)).collect(),
        edges,
        routes,
        routing_text: opt.table.to_text(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Simulates the LP-routed network and the single-bank baseline on the
/// same traffic.
#[allow(clippy::too_many_arguments)]
pub fn compare_json(
    buffer_pkts: u64,
    link_rate_bps: f64,
    lambda_pps: f64,
    multiplier: u32,
    horizon_s: f64,
    reps: usize,
    seed: u64,
) -> Result<String, String> {
    let mut proposed = Scenario::reference_preset(buffer_pkts, link_rate_bps, lambda_pps);
    proposed.horizon_s = horizon_s;
    proposed.reps = reps;
    let baseline = Scenario::baseline_single(multiplier, &proposed);
    let view = |s: &Scenario| -> Result<ModeView, String> {
        let r = evaluate(s, None, reps, seed).map_err(|e| e.to_string())?;
        Ok(ModeView {
            mean_delay_s: r.delay.map(|d| d.mean),
            delay_half_width_s: r.delay.map(|d| d.half_width),
            pli_pct: r.pli.mean,
            pli_half_width_pct: r.pli.half_width,
        })
    };
    let out = CompareView { proposed: view(&proposed)?, baseline: view(&baseline)?, multiplier };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Analytic M/M/1/K blocking probability for `points` loads in `(0, rho_max]`.
pub fn blocking_curve_json(rho_max: f64, capacity: u64, points: usize) -> Result<String, String> {
    if !rho_max.is_finite() || rho_max <= 0.0 || points == 0 || capacity == 0 {
        return Err("need rho_max > 0, capacity >= 1 and points >= 1".into());
    }
    let curve: Vec<CurvePoint> = (1..=points)
        .map(|i| {
            let rho = rho_max * i as f64 / points as f64;
            CurvePoint { rho, blocking: mm1k_blocking(rho, capacity) }
        })
        .collect();
    serde_json::to_string(&curve).map_err(|e| e.to_string())
}

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = solveTorus)]
pub fn solve_torus(rows: usize, cols: usize, link_rate_bps: f64, lambda_pps: f64, commodities: usize) -> Result<String, JsValue> {
    to_js(solve_torus_json(rows, cols, link_rate_bps, lambda_pps, commodities))
}

#[wasm_bindgen(js_name = compareModes)]
pub fn compare_modes(
    buffer_pkts: u32,
    link_rate_bps: f64,
    lambda_pps: f64,
    multiplier: u32,
    horizon_s: f64,
    reps: usize,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(compare_json(buffer_pkts as u64, link_rate_bps, lambda_pps, multiplier, horizon_s, reps, seed as u64))
}

#[wasm_bindgen(js_name = blockingCurve)]
pub fn blocking_curve(rho_max: f64, capacity: u32, points: usize) -> Result<String, JsValue> {
    to_js(blocking_curve_json(rho_max, capacity as u64, points))
}
