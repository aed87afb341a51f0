//! Max-min residual-capacity multicommodity flow over pre-enumerated paths.
//!
//! The objective `max min_(u,v) (c(u,v) - load(u,v))` is solved in epigraph
//! form: maximize `z` subject to `z + load(u,v) <= c(u,v)` for every edge and
//! `sum_p x_p^k = d^k` for every commodity, with `x, z >= 0`. Since `z >= 0`
//! the edge rows also enforce `load(u,v) <= c(u,v)`.

pub mod routing;
pub mod simplex;

use serde::Serialize;
use thiserror::Error;

use crate::pathgen::{Commodity, PathSet};
use crate::topology::{EdgeId, PayloadGraph};
pub use routing::{flows_to_routing_table, RouteEntry, RoutingError, RoutingTable};
use simplex::{LinearProgram, Relation, SimplexError};

/// Relative tolerance for the demand, capacity and objective invariants.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("commodity {0} has an empty path set")]
    EmptyPathSet(usize),
    #[error("expected one path set per commodity ({commodities} commodities, {pathsets} path sets)")]
    PathSetMismatch { commodities: usize, pathsets: usize },
    #[error("commodity {commodity}: demand {demand} must be positive and finite")]
    InvalidDemand { commodity: usize, demand: f64 },
    #[error("demands cannot be routed within link capacities{}", hint.as_deref().map(|h| format!(" ({h})")).unwrap_or_default())]
    Infeasible { hint: Option<String> },
    #[error("solver failure: {0}")]
    Solver(SimplexError),
}

/// Meaning of each LP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Column {
    PathFlow { commodity: usize, path: usize },
    MinResidual,
}

/// The epigraph LP plus the bookkeeping to map columns and rows back.
#[derive(Debug, Clone)]
pub struct MaxMinModel {
    pub lp: LinearProgram,
    pub columns: Vec<Column>,
    /// Row `i < edge_rows` belongs to edge `i`; the rest are demand rows in
    /// commodity order.
    pub edge_rows: usize,
}

impl MaxMinModel {
    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.lp.rows.len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoutingSolution {
    /// `flows[k][p]` is the flow of commodity `k` on its path `p`, bit/s.
    pub flows: Vec<Vec<f64>>,
    /// Achieved minimum residual capacity, bit/s.
    pub objective: f64,
    pub edge_flow: Vec<f64>,
    pub residual: Vec<f64>,
    #[serde(skip)]
    pub pathsets: Vec<PathSet>,
    pub pivots: usize,
}

impl RoutingSolution {
    /// Edge with the smallest residual, lowest id on ties.
    pub fn bottleneck(&self) -> Option<EdgeId> {
        self.residual.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
    }
}

fn check_inputs(commodities: &[Commodity], pathsets: &[PathSet]) -> Result<(), SolveError> {
    if commodities.len() != pathsets.len() {
        return Err(SolveError::PathSetMismatch { commodities: commodities.len(), pathsets: pathsets.len() });
    }
    for (k, ps) in pathsets.iter().enumerate() {
        if ps.is_empty() {
            return Err(SolveError::EmptyPathSet(commodities[k].id));
        }
    }
    Ok(())
}

/// Builds the epigraph LP. Columns are path flows in commodity-major order
/// followed by `z`; rows are the edge rows in edge-id order followed by the
/// demand rows.
pub fn build_lp(graph: &PayloadGraph, commodities: &[Commodity], pathsets: &[PathSet]) -> Result<MaxMinModel, SolveError> {
    check_inputs(commodities, pathsets)?;
    let mut columns = Vec::new();
    let mut first_col = Vec::with_capacity(pathsets.len());
    for (k, ps) in pathsets.iter().enumerate() {
        first_col.push(columns.len());
        columns.extend((0..ps.len()).map(|path| Column::PathFlow { commodity: k, path }));
    }
    let z = columns.len();
    columns.push(Column::MinResidual);

    let mut edge_cols: Vec<Vec<(usize, f64)>> = vec![vec![(z, 1.0)]; graph.edge_count()];
    for (k, ps) in pathsets.iter().enumerate() {
        for (p, path) in ps.paths().iter().enumerate() {
            for &e in path.edges() {
                edge_cols[e].push((first_col[k] + p, 1.0));
            }
        }
    }

    let mut lp = LinearProgram::new(columns.len());
    lp.objective[z] = 1.0;
    for (e, coeffs) in edge_cols.into_iter().enumerate() {
        lp.add_row(coeffs, Relation::Le, graph.edge(e).capacity);
    }
    for (k, ps) in pathsets.iter().enumerate() {
        let coeffs = (0..ps.len()).map(|p| (first_col[k] + p, 1.0)).collect();
        lp.add_row(coeffs, Relation::Eq, commodities[k].demand);
    }
    Ok(MaxMinModel { lp, columns, edge_rows: graph.edge_count() })
}

/// Solves the max-min LP and returns path flows that meet every demand.
pub fn solve_maxmin(graph: &PayloadGraph, commodities: &[Commodity], pathsets: &[PathSet]) -> Result<RoutingSolution, SolveError> {
    for c in commodities {
        if !(c.demand > 0.0 && c.demand.is_finite()) {
            return Err(SolveError::InvalidDemand { commodity: c.id, demand: c.demand });
        }
    }
    let mut model = build_lp(graph, commodities, pathsets)?;

    // Work in units of the largest capacity so the tableau is O(1).
    let scale = graph.edges().iter().map(|e| e.capacity).fold(0.0, f64::max).max(1.0);
    for row in &mut model.lp.rows {
        row.rhs /= scale;
    }
    let sol = match model.lp.solve() {
        Ok(sol) => sol,
        Err(SimplexError::Infeasible(_)) => return Err(SolveError::Infeasible { hint: infeasibility_hint(graph, commodities) }),
        Err(e) => return Err(SolveError::Solver(e)),
    };

    let mut flows: Vec<Vec<f64>> = Vec::with_capacity(pathsets.len());
    let mut col = 0;
    for (k, ps) in pathsets.iter().enumerate() {
        let mut f: Vec<f64> = sol.x[col..col + ps.len()].iter().map(|v| v.max(0.0) * scale).collect();
        col += ps.len();
        // remove round-off so that sum_p x_p^k = d^k holds to machine precision
        let total: f64 = f.iter().sum();
        if total > 0.0 {
            let adjust = commodities[k].demand / total;
            f.iter_mut().for_each(|v| *v *= adjust);
        }
        flows.push(f);
    }

    let edge_flow = edge_loads(graph, pathsets, &flows);
    for (e, load) in edge_flow.iter().enumerate() {
        let cap = graph.edge(e).capacity;
        if *load > cap * (1.0 + FEASIBILITY_TOL) {
            return Err(SolveError::Infeasible { hint: Some(format!("edge {e} overloaded after rounding: {load} > {cap}")) });
        }
    }
    let residual: Vec<f64> = residuals_from_loads(graph, &edge_flow);
    let objective = residual.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RoutingSolution { flows, objective, edge_flow, residual, pathsets: pathsets.to_vec(), pivots: sol.pivots })
}

/// Total flow on every edge for the given path flows.
pub fn edge_loads(graph: &PayloadGraph, pathsets: &[PathSet], flows: &[Vec<f64>]) -> Vec<f64> {
    let mut load = vec![0.0; graph.edge_count()];
    for (ps, f) in pathsets.iter().zip(flows) {
        for (path, &x) in ps.paths().iter().zip(f) {
            for &e in path.edges() {
                load[e] += x;
            }
        }
    }
    load
}

fn residuals_from_loads(graph: &PayloadGraph, loads: &[f64]) -> Vec<f64> {
    graph.edges().iter().zip(loads).map(|(e, l)| e.capacity - l).collect()
}

/// Residual capacity `c(u,v) - load(u,v)` per edge.
pub fn residuals(graph: &PayloadGraph, solution: &RoutingSolution) -> Vec<f64> {
    residuals_from_loads(graph, &edge_loads(graph, &solution.pathsets, &solution.flows))
}

/// Looks for an overloaded cut: each single node, then the set of all
/// sources and the complement of the set of all destinations.
pub fn infeasibility_hint(graph: &PayloadGraph, commodities: &[Commodity]) -> Option<String> {
    let n = graph.node_count();
    let commodities: Vec<&Commodity> = commodities.iter().filter(|c| c.source < n && c.destination < n).collect();
    let mut out_demand = vec![0.0; n];
    let mut in_demand = vec![0.0; n];
    for c in &commodities {
        out_demand[c.source] += c.demand;
        in_demand[c.destination] += c.demand;
    }
    for node in 0..n {
        let cap = graph.out_capacity(node);
        if out_demand[node] > cap {
            return Some(format!(
                "demand leaving node {node} is {:.6e} bit/s but its outgoing capacity is {:.6e} bit/s",
                out_demand[node], cap
            ));
        }
        let cap = graph.in_capacity(node);
        if in_demand[node] > cap {
            return Some(format!(
                "demand entering node {node} is {:.6e} bit/s but its incoming capacity is {:.6e} bit/s",
                in_demand[node], cap
            ));
        }
    }
    let mut sources = vec![false; n];
    let mut not_destinations = vec![true; n];
    for c in &commodities {
        sources[c.source] = true;
        not_destinations[c.destination] = false;
    }
    for side in [sources, not_destinations] {
        let demand: f64 = commodities.iter().filter(|c| side[c.source] && !side[c.destination]).map(|c| c.demand).sum();
        let cap: f64 = graph.edges().iter().filter(|e| side[e.from] && !side[e.to]).map(|e| e.capacity).sum();
        if demand > cap {
            let members: Vec<String> = (0..n).filter(|&v| side[v]).map(|v| v.to_string()).collect();
            return Some(format!(
                "demand leaving node set {{{}}} is {demand:.6e} bit/s but the cut capacity is {cap:.6e} bit/s",
                members.join(",")
            ));
        }
    }
    None
}
