//! Optimize-then-simulate glue shared by the CLI and the browser demo.

use thiserror::Error;

use crate::maxmin::{flows_to_routing_table, solve_maxmin, RoutingSolution, RoutingTable, SolveError};
use crate::pathgen::{enumerate_paths, Commodity, PathError, PathSet};
use crate::queuesim::{run_replications, MetricsReport, SimError};
use crate::scenario::{ConfigError, Mode, Scenario};
use crate::topology::PayloadGraph;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub struct Optimized {
    pub graph: PayloadGraph,
    pub commodities: Vec<Commodity>,
    pub solution: RoutingSolution,
    /// Probabilities rounded exactly as in the routing-table file.
    pub table: RoutingTable,
}

/// Enumerates paths, solves the max-min LP and derives the routing table.
pub fn optimize(scenario: &Scenario) -> Result<Optimized, PipelineError> {
    let graph = scenario.build_graph()?;
    let commodities = scenario.build_commodities(&graph)?;
    let pathsets = commodities.iter().map(|c| enumerate_paths(&graph, c, scenario.max_hops)).collect::<Result<Vec<PathSet>, _>>()?;
    let solution = solve_maxmin(&graph, &commodities, &pathsets)?;
    let table = flows_to_routing_table(&solution, &commodities).quantized(&graph);
    Ok(Optimized { graph, commodities, solution, table })
}

/// Replicated simulation; solves the LP first when the scenario needs a
/// routing table and none is supplied.
pub fn evaluate(scenario: &Scenario, routing: Option<&RoutingTable>, reps: usize, seed: u64) -> Result<MetricsReport, PipelineError> {
    match (scenario.mode, routing) {
        (Mode::Proposed, None) => {
            let opt = optimize(scenario)?;
            Ok(run_replications(scenario, Some(&opt.table), reps, seed)?)
        }
        _ => Ok(run_replications(scenario, routing, reps, seed)?),
    }
}
