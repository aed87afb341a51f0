//! Oracles and generators shared by the integration and acceptance targets.
//! Everything here is computed independently of the library's own
//! bookkeeping: loads are recomputed from node sequences, queues are checked
//! against closed forms.
#![allow(dead_code)]

use payload_te::maxmin::{flows_to_routing_table, solve_maxmin, RoutingSolution, RoutingTable, SolveError};
use payload_te::pathgen::{enumerate_paths, Commodity, PathSet};
use payload_te::queuesim::{Flow, Network, RunConfig, RunMetrics, Service, Station, StationKind};
use payload_te::topology::{build_torus, PayloadGraph};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A max-min instance with explicit path sets.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: PayloadGraph,
    pub commodities: Vec<Commodity>,
    pub pathsets: Vec<PathSet>,
}

impl Instance {
    pub fn solve(&self) -> Result<RoutingSolution, SolveError> {
        solve_maxmin(&self.graph, &self.commodities, &self.pathsets)
    }

    fn capacity(&self, from: usize, to: usize) -> f64 {
        let id = self.graph.edge_id(from, to).expect("path uses an existing edge");
        self.graph.edge(id).capacity
    }
}

/// Number of ways to split `steps` grid units over `parts` paths.
pub fn compositions(steps: u64, parts: u64) -> f64 {
    // C(steps + parts - 1, parts - 1)
    (1..parts).fold(1.0, |acc, i| acc * (steps + i) as f64 / i as f64)
}

/// Random torus instance, at most `3x3` and three commodities. Path sets are
/// cut down (keeping enumeration order) until a `steps`-grid search needs at
/// most `grid_budget` leaves.
pub fn random_instance(seed: u64, steps: u64, grid_budget: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(2..=3);
    let cols = rng.random_range(2..=3);
    let link = rng.random_range(1.0..10.0) * 1e9;
    let graph = build_torus(rows, cols, link).unwrap();
    let n = graph.node_count();
    let count = rng.random_range(1..=3);
    let mut commodities = Vec::new();
    let mut pathsets = Vec::new();
    for k in 0..count {
        let source = rng.random_range(0..n);
        let mut destination = rng.random_range(0..n - 1);
        if destination >= source {
            destination += 1;
        }
        let demand = rng.random_range(0.1..1.2) * link / count as f64;
        let c = Commodity { id: k, source, destination, demand };
        let dist = graph.hop_distances(source)[destination].unwrap();
        let max_hops = dist + rng.random_range(0..=2);
        pathsets.push(enumerate_paths(&graph, &c, max_hops).unwrap());
        commodities.push(c);
    }
    let full: Vec<usize> = pathsets.iter().map(PathSet::len).collect();
    let mut keep = vec![1usize; count];
    loop {
        let mut grew = false;
        for k in 0..count {
            if keep[k] < full[k] {
                keep[k] += 1;
                let leaves: f64 = keep.iter().map(|&p| compositions(steps, p as u64)).product();
                if leaves <= grid_budget {
                    grew = true;
                } else {
                    keep[k] -= 1;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let pathsets = pathsets.into_iter().zip(&keep).map(|(ps, &p)| PathSet::from_paths(ps.commodity(), ps.paths()[..p].to_vec())).collect();
    Instance { graph, commodities, pathsets }
}

/// Edge loads recomputed by walking each path's node sequence.
pub fn loads_by_walk(inst: &Instance, flows: &[Vec<f64>]) -> Vec<((usize, usize), f64)> {
    let mut loads: std::collections::BTreeMap<(usize, usize), f64> = inst.graph.edges().iter().map(|e| ((e.from, e.to), 0.0)).collect();
    for (ps, f) in inst.pathsets.iter().zip(flows) {
        for (path, &x) in ps.paths().iter().zip(f) {
            for w in path.nodes().windows(2) {
                *loads.get_mut(&(w[0], w[1])).expect("edge exists") += x;
            }
        }
    }
    loads.into_iter().collect()
}

/// Exhaustive search over splits of each demand in units of `demand/steps`.
/// Returns the best feasible minimum residual and the number of leaves.
pub fn grid_search(inst: &Instance, steps: u64) -> (Option<f64>, u64) {
    let edges: Vec<(usize, usize)> = inst.graph.edges().iter().map(|e| (e.from, e.to)).collect();
    let cap: Vec<f64> = edges.iter().map(|&(u, v)| inst.capacity(u, v)).collect();
    let index = |u: usize, v: usize| edges.iter().position(|&e| e == (u, v)).unwrap();
    let path_edges: Vec<Vec<Vec<usize>>> = inst
        .pathsets
        .iter()
        .map(|ps| ps.paths().iter().map(|p| p.nodes().windows(2).map(|w| index(w[0], w[1])).collect()).collect())
        .collect();
    let mut load = vec![0.0; edges.len()];
    let mut best: Option<f64> = None;
    let mut leaves = 0u64;
    #[allow(clippy::too_many_arguments)]
    fn split(
        inst: &Instance,
        path_edges: &[Vec<Vec<usize>>],
        cap: &[f64],
        steps: u64,
        k: usize,
        p: usize,
        left: u64,
        load: &mut Vec<f64>,
        best: &mut Option<f64>,
        leaves: &mut u64,
    ) {
        if k == inst.commodities.len() {
            *leaves += 1;
            let z = cap.iter().zip(load.iter()).map(|(c, l)| c - l).fold(f64::INFINITY, f64::min);
            let feasible = cap.iter().zip(load.iter()).all(|(c, l)| *l <= c * (1.0 + 1e-12));
            if feasible && best.is_none_or(|b| z > b) {
                *best = Some(z);
            }
            return;
        }
        let paths = &path_edges[k];
        let unit = inst.commodities[k].demand / steps as f64;
        if p + 1 == paths.len() {
            let x = left as f64 * unit;
            for &e in &paths[p] {
                load[e] += x;
            }
            split(inst, path_edges, cap, steps, k + 1, 0, steps, load, best, leaves);
            for &e in &paths[p] {
                load[e] -= x;
            }
            return;
        }
        for units in 0..=left {
            let x = units as f64 * unit;
            for &e in &paths[p] {
                load[e] += x;
            }
            split(inst, path_edges, cap, steps, k, p + 1, left - units, load, best, leaves);
            for &e in &paths[p] {
                load[e] -= x;
            }
        }
    }
    split(inst, &path_edges, &cap, steps, 0, 0, steps, &mut load, &mut best, &mut leaves);
    (best, leaves)
}

/// Demand, non-negativity, capacity and epigraph constraints of a solution,
/// each at `rel` relative tolerance.
pub fn check_lp_constraints(inst: &Instance, sol: &RoutingSolution, rel: f64) -> Result<(), String> {
    if sol.flows.len() != inst.commodities.len() {
        return Err("flow vector count differs from commodity count".into());
    }
    for (k, (c, f)) in inst.commodities.iter().zip(&sol.flows).enumerate() {
        if f.len() != inst.pathsets[k].len() {
            return Err(format!("commodity {k}: {} flows for {} paths", f.len(), inst.pathsets[k].len()));
        }
        let total: f64 = f.iter().sum();
        if (total - c.demand).abs() > rel * c.demand {
            return Err(format!("commodity {k}: routed {total} of demand {}", c.demand));
        }
        if let Some(x) = f.iter().find(|&&x| x < -rel * c.demand) {
            return Err(format!("commodity {k}: negative flow {x}"));
        }
    }
    for ((u, v), load) in loads_by_walk(inst, &sol.flows) {
        let cap = inst.capacity(u, v);
        if load > cap * (1.0 + rel) {
            return Err(format!("edge {u}->{v}: load {load} exceeds capacity {cap}"));
        }
        if sol.objective > cap - load + rel * cap {
            return Err(format!("edge {u}->{v}: residual {} below objective {}", cap - load, sol.objective));
        }
    }
    Ok(())
}

/// Routing-table probabilities sum to one per commodity and survive a
/// text round trip.
pub fn check_normalization(inst: &Instance, sol: &RoutingSolution) -> Result<(), String> {
    let table = flows_to_routing_table(sol, &inst.commodities);
    for c in &inst.commodities {
        let routes = table.routes(c.id).ok_or(format!("commodity {} missing", c.id))?;
        let sum: f64 = routes.iter().map(|r| r.probability).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("commodity {}: probabilities sum to {sum}", c.id));
        }
        if routes.iter().any(|r| !(r.probability > 0.0 && r.probability <= 1.0)) {
            return Err(format!("commodity {}: probability outside (0, 1]", c.id));
        }
    }
    let parsed = RoutingTable::parse(&table.to_text(), &inst.graph).map_err(|e| e.to_string())?;
    if parsed != table.quantized(&inst.graph) {
        return Err("parsed table differs from quantized table".into());
    }
    Ok(())
}

/// One station fed by one Poisson flow.
pub fn single_queue(service: Service, buffer: u64, lambda: f64) -> Network {
    Network {
        stations: vec![Station { kind: StationKind::Modem(0), service, buffer }],
        flows: vec![Flow { commodity: 0, rate_pps: lambda, routes: vec![vec![0]], weights: vec![1.0] }],
    }
}

/// Runs `reps` replications with seeds `base..base + reps`.
pub fn replicate(net: &Network, horizon: f64, warmup: f64, base: u64, reps: u64) -> Vec<RunMetrics> {
    (base..base + reps).map(|seed| net.run(&RunConfig { horizon, warmup, seed })).collect()
}

/// Small random queueing network: up to four stations with tiny buffers and
/// up to three flows over random simple station sequences.
pub fn random_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=4);
    let stations = (0..n)
        .map(|s| Station {
            kind: StationKind::Modem(s),
            service: if rng.random_bool(0.5) {
                Service::Exponential { rate: rng.random_range(2e3..2e4) }
            } else {
                Service::Fixed { seconds: rng.random_range(5e-5..5e-4) }
            },
            buffer: rng.random_range(1..=20),
        })
        .collect();
    let flows = (0..rng.random_range(1..=3))
        .map(|k| {
            let route_count = rng.random_range(1..=3);
            let routes: Vec<Vec<usize>> = (0..route_count)
                .map(|_| {
                    let mut order: Vec<usize> = (0..n).collect();
                    for i in (1..n).rev() {
                        order.swap(i, rng.random_range(0..=i));
                    }
                    order.truncate(rng.random_range(1..=n));
                    order
                })
                .collect();
            Flow {
                commodity: k,
                rate_pps: rng.random_range(1e3..2e4),
                weights: (0..route_count).map(|_| rng.random_range(0.1..1.0)).collect(),
                routes,
            }
        })
        .collect();
    Network { stations, flows }
}

pub fn check_conservation(m: &RunMetrics) -> Result<(), String> {
    for (k, c) in m.per_commodity.iter().enumerate().chain(std::iter::once((usize::MAX, &m.aggregate))) {
        if c.offered != c.delivered + c.dropped + c.in_flight {
            return Err(format!(
                "flow {k}: offered {} != delivered {} + dropped {} + in flight {}",
                c.offered, c.delivered, c.dropped, c.in_flight
            ));
        }
    }
    let sum = |f: fn(&payload_te::queuesim::CommodityMetrics) -> u64| m.per_commodity.iter().map(f).sum::<u64>();
    if sum(|c| c.offered) != m.aggregate.offered || sum(|c| c.dropped) != m.aggregate.dropped {
        return Err("aggregate differs from per-commodity totals".into());
    }
    if m.causality_violations != 0 {
        return Err(format!("{} causality violations", m.causality_violations));
    }
    Ok(())
}

pub fn check_buffer_bound(net: &Network, m: &RunMetrics) -> Result<(), String> {
    for (s, (station, &peak)) in net.stations.iter().zip(&m.station_peaks).enumerate() {
        if peak > station.buffer {
            return Err(format!("station {s}: peak {peak} above buffer {}", station.buffer));
        }
    }
    Ok(())
}

/// Paths are simple, follow existing edges, join the commodity endpoints and
/// respect the hop bound.
pub fn check_path_simplicity(graph: &PayloadGraph, c: &Commodity, ps: &PathSet, max_hops: usize) -> Result<(), String> {
    let mut seen = std::collections::BTreeSet::new();
    for p in ps.paths() {
        let nodes = p.nodes();
        if nodes.first() != Some(&c.source) || nodes.last() != Some(&c.destination) {
            return Err(format!("path {} has wrong endpoints", p.arrow_string()));
        }
        let distinct: std::collections::BTreeSet<_> = nodes.iter().collect();
        if distinct.len() != nodes.len() {
            return Err(format!("path {} repeats a node", p.arrow_string()));
        }
        if nodes.len() - 1 > max_hops {
            return Err(format!("path {} exceeds {max_hops} hops", p.arrow_string()));
        }
        if nodes.windows(2).any(|w| graph.edge_id(w[0], w[1]).is_none()) {
            return Err(format!("path {} uses a missing edge", p.arrow_string()));
        }
        if !seen.insert(nodes.to_vec()) {
            return Err(format!("path {} listed twice", p.arrow_string()));
        }
    }
    Ok(())
}

/// Deterministic runner so every invocation sees the same cases.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// Two-sided 95% half-width of the sample mean (Student t).
pub fn t_interval(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // t quantiles for df 1..=30
    const T: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101,
        2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    let t = T[samples.len().clamp(2, 31) - 2];
    (mean, t * (var / n).sqrt())
}
