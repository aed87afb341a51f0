//! Routing tables: per-commodity path split probabilities.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::RoutingSolution;
use crate::pathgen::{Commodity, Path};
use crate::topology::PayloadGraph;

/// Paths carrying less than this fraction of a commodity's demand are dropped.
pub const PRUNE_FRACTION: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("commodity {commodity}: probabilities sum to {sum}, expected 1")]
    NotNormalized { commodity: usize, sum: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub path: Path,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoutingTable {
    routes: BTreeMap<usize, Vec<RouteEntry>>,
}

impl RoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, commodity: usize, entries: Vec<RouteEntry>) {
        self.routes.insert(commodity, entries);
    }

    pub fn routes(&self, commodity: usize) -> Option<&[RouteEntry]> {
        self.routes.get(&commodity).map(Vec::as_slice)
    }

    pub fn commodities(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// One record per line: `commodity k: n0->n1->...->nk, probability`, with
    /// probabilities printed to 9 decimal places.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# commodity k: node_seq, probability\n");
        for (k, entries) in &self.routes {
            for e in entries {
                let _ = writeln!(out, "commodity {k}: {}, {:.9}", e.path.arrow_string(), e.probability);
            }
        }
        out
    }

    pub fn parse(text: &str, graph: &PayloadGraph) -> Result<Self, RoutingError> {
        let mut table = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| RoutingError::Parse { line: i + 1, msg };
            let rest = line.strip_prefix("commodity").ok_or_else(|| err("expected `commodity k: path, probability`".into()))?;
            let (id, rest) = rest.split_once(':').ok_or_else(|| err("missing `:`".into()))?;
            let commodity: usize = id.trim().parse().map_err(|_| err(format!("bad commodity id {:?}", id.trim())))?;
            let (seq, prob) = rest.rsplit_once(',').ok_or_else(|| err("missing `, probability`".into()))?;
            let probability: f64 = prob.trim().parse().map_err(|_| err(format!("bad probability {:?}", prob.trim())))?;
            if !(0.0..=1.0).contains(&probability) {
                return Err(err(format!("probability {probability} outside [0, 1]")));
            }
            let nodes = seq
                .trim()
                .split("->")
                .map(|n| n.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err(format!("bad node sequence {:?}", seq.trim())))?;
            let path = Path::from_nodes(graph, nodes).ok_or_else(|| err(format!("{:?} is not a simple path of the graph", seq.trim())))?;
            table.routes.entry(commodity).or_default().push(RouteEntry { path, probability });
        }
        for (&commodity, entries) in &table.routes {
            let sum: f64 = entries.iter().map(|e| e.probability).sum();
            // 9-decimal rounding leaves at most 5e-10 per entry
            if (sum - 1.0).abs() > 1e-6 {
                return Err(RoutingError::NotNormalized { commodity, sum });
            }
        }
        Ok(table)
    }

    /// The table as the simulator would see it after a write/read cycle.
    pub fn quantized(&self, graph: &PayloadGraph) -> Self {
        Self::parse(&self.to_text(), graph).expect("formatted routing table parses")
    }
}

/// Path probabilities `x_p^k / d^k`, pruning near-zero flows and renormalising.
pub fn flows_to_routing_table(solution: &RoutingSolution, commodities: &[Commodity]) -> RoutingTable {
    let mut table = RoutingTable::new();
    for ((c, flows), ps) in commodities.iter().zip(&solution.flows).zip(&solution.pathsets) {
        let kept: Vec<(usize, f64)> =
            flows.iter().enumerate().filter(|(_, &x)| x >= PRUNE_FRACTION * c.demand).map(|(p, &x)| (p, x / c.demand)).collect();
        let total: f64 = kept.iter().map(|(_, q)| q).sum();
        let entries = kept.into_iter().map(|(p, q)| RouteEntry { path: ps.paths()[p].clone(), probability: q / total }).collect();
        table.insert(c.id, entries);
    }
    table
}
