//! Payload graph: modem banks as nodes, inter-modem links as directed edges.
//!
//! Node identifiers are dense integers `0..N`. A torus node `(r, c)` maps to
//! `r * cols + c`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid torus dimension {rows}x{cols}: both must be at least 2")]
    InvalidDimension { rows: usize, cols: usize },
    #[error("invalid link capacity {0} bit/s: must be positive and finite")]
    InvalidCapacity(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid graph: {0}")]
    Invalid(Violation),
}

/// A directed link with capacity in bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: f64,
}

/// First structural problem found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfLoop { edge: EdgeId, node: NodeId },
    DuplicateEdge { edge: EdgeId, from: NodeId, to: NodeId },
    NonpositiveCapacity { edge: EdgeId, capacity: f64 },
    DanglingNode { edge: EdgeId, node: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::SelfLoop { edge, node } => write!(f, "self-loop at node {node} (edge #{edge})"),
            Violation::DuplicateEdge { edge, from, to } => {
                write!(f, "duplicate edge {from}->{to} (edge #{edge})")
            }
            Violation::NonpositiveCapacity { edge, capacity } => {
                write!(f, "nonpositive capacity {capacity} on edge #{edge}")
            }
            Violation::DanglingNode { edge, node } => {
                write!(f, "edge #{edge} references unknown node {node}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PayloadGraph {
    node_count: usize,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<EdgeId>>,
    lookup: HashMap<(NodeId, NodeId), EdgeId>,
}

impl PayloadGraph {
    /// Builds a graph without checking it. Use [`validate_graph`] or
    /// [`PayloadGraph::checked`] when the input is untrusted.
    pub fn from_edges(node_count: usize, edges: Vec<Edge>) -> Self {
        let mut outgoing = vec![Vec::new(); node_count];
        let mut lookup = HashMap::with_capacity(edges.len());
        for (id, e) in edges.iter().enumerate() {
            if e.from < node_count {
                outgoing[e.from].push(id);
            }
            lookup.entry((e.from, e.to)).or_insert(id);
        }
        // neighbour order drives path enumeration order
        for out in &mut outgoing {
            out.sort_by_key(|&id| (edges[id].to, id));
        }
        Self { node_count, edges, outgoing, lookup }
    }

    pub fn checked(node_count: usize, edges: Vec<Edge>) -> Result<Self, TopologyError> {
        let graph = Self::from_edges(node_count, edges);
        match validate_graph(&graph) {
            Ok(()) => Ok(graph),
            Err(v) => Err(TopologyError::Invalid(v)),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edge_id(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        self.lookup.get(&(from, to)).copied()
    }

    /// Outgoing edge ids of `node`, ordered by head node.
    pub fn outgoing(&self, node: NodeId) -> &[EdgeId] {
        &self.outgoing[node]
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.edges.iter().filter(|e| e.to == node).count()
    }

    pub fn out_capacity(&self, node: NodeId) -> f64 {
        self.outgoing[node].iter().map(|&e| self.edges[e].capacity).sum()
    }

    pub fn in_capacity(&self, node: NodeId) -> f64 {
        self.edges.iter().filter(|e| e.to == node).map(|e| e.capacity).sum()
    }

    /// Hop distance from `source` to every node, `None` when unreachable.
    pub fn hop_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &e in &self.outgoing[u] {
                let v = self.edges[e].to;
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Longest shortest path, or `None` if the graph is not strongly connected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for s in 0..self.node_count {
            for d in self.hop_distances(s) {
                best = best.max(d?);
            }
        }
        Some(best)
    }

    /// Plain-text edge list: `u v capacity_bits_per_s`, one directed edge per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} nodes, {} directed edges", self.node_count, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.from, e.to, e.capacity);
        }
        out
    }

    /// Parses an edge list. Node count is inferred as the largest id plus one.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: String| TopologyError::Parse { line: i + 1, msg };
            if fields.len() != 3 {
                return Err(parse_err(format!("expected `u v capacity`, got {line:?}")));
            }
            let from = fields[0].parse().map_err(|_| parse_err(format!("bad node id {:?}", fields[0])))?;
            let to = fields[1].parse().map_err(|_| parse_err(format!("bad node id {:?}", fields[1])))?;
            let capacity = fields[2].parse().map_err(|_| parse_err(format!("bad capacity {:?}", fields[2])))?;
            edges.push(Edge { from, to, capacity });
        }
        let node_count = edges.iter().map(|e| e.from.max(e.to) + 1).max().unwrap_or(0);
        Self::checked(node_count, edges)
    }
}

/// Builds a `rows x cols` torus. Each node links to its four wrap-around
/// neighbours; on a dimension of size 2 both wrap neighbours coincide and the
/// edge is kept once.
pub fn build_torus(rows: usize, cols: usize, link_rate: f64) -> Result<PayloadGraph, TopologyError> {
    if rows < 2 || cols < 2 {
        return Err(TopologyError::InvalidDimension { rows, cols });
    }
    if !(link_rate > 0.0 && link_rate.is_finite()) {
        return Err(TopologyError::InvalidCapacity(link_rate));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(4 * rows * cols);
    let mut seen = std::collections::HashSet::new();
    for r in 0..rows {
        for c in 0..cols {
            let u = id(r, c);
            let neighbours = [id((r + rows - 1) % rows, c), id((r + 1) % rows, c), id(r, (c + cols - 1) % cols), id(r, (c + 1) % cols)];
            for v in neighbours {
                if seen.insert((u, v)) {
                    edges.push(Edge { from: u, to: v, capacity: link_rate });
                }
            }
        }
    }
    Ok(PayloadGraph::from_edges(rows * cols, edges))
}

/// Returns the first violated structural invariant, if any.
pub fn validate_graph(graph: &PayloadGraph) -> Result<(), Violation> {
    let mut seen = std::collections::HashSet::new();
    for (id, e) in graph.edges().iter().enumerate() {
        for node in [e.from, e.to] {
            if node >= graph.node_count() {
                return Err(Violation::DanglingNode { edge: id, node });
            }
        }
        if e.from == e.to {
            return Err(Violation::SelfLoop { edge: id, node: e.from });
        }
        if !seen.insert((e.from, e.to)) {
            return Err(Violation::DuplicateEdge { edge: id, from: e.from, to: e.to });
        }
        if !(e.capacity > 0.0 && e.capacity.is_finite()) {
            return Err(Violation::NonpositiveCapacity { edge: id, capacity: e.capacity });
        }
    }
    Ok(())
}
