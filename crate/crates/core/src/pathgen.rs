//! Hop-bounded simple path enumeration per commodity, with an edge index.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{EdgeId, NodeId, PayloadGraph};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("commodity {commodity}: no path from {origin} to {destination} within {max_hops} hops")]
    NoPathFound { commodity: usize, origin: NodeId, destination: NodeId, max_hops: usize },
    #[error("commodity {commodity}: node {node} is not in the graph")]
    UnknownNode { commodity: usize, node: NodeId },
    #[error("commodity {0}: source equals destination")]
    SameEndpoints(usize),
    #[error("max_hops must be at least 1")]
    ZeroHopBound,
    #[error("edge {0}->{1} is not in the graph")]
    UnknownEdge(NodeId, NodeId),
}

/// A source/destination demand, in bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub id: usize,
    pub source: NodeId,
    pub destination: NodeId,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

impl Path {
    /// Resolves a node sequence against `graph`. Returns `None` if a hop has
    /// no edge or a node repeats.
    pub fn from_nodes(graph: &PayloadGraph, nodes: Vec<NodeId>) -> Option<Self> {
        if nodes.len() < 2 {
            return None;
        }
        let mut seen = vec![false; graph.node_count()];
        for &n in &nodes {
            if n >= graph.node_count() || std::mem::replace(&mut seen[n], true) {
                return None;
            }
        }
        let edges = nodes.windows(2).map(|w| graph.edge_id(w[0], w[1])).collect::<Option<Vec<_>>>()?;
        Some(Self { nodes, edges })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn destination(&self) -> NodeId {
        self.nodes[self.nodes.len() - 1]
    }

    /// `a->b->c`
    pub fn arrow_string(&self) -> String {
        let parts: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        parts.join("->")
    }
}

#[derive(Debug, Clone)]
pub struct PathSet {
    commodity: usize,
    paths: Vec<Path>,
    index: BTreeMap<(NodeId, NodeId), Vec<usize>>,
}

impl PathSet {
    /// Builds a path set from already-resolved paths, deduplicating while
    /// keeping first occurrence order.
    pub fn from_paths(commodity: usize, paths: Vec<Path>) -> Self {
        let mut unique: Vec<Path> = Vec::with_capacity(paths.len());
        let mut seen = std::collections::HashSet::new();
        for p in paths {
            if seen.insert(p.nodes.clone()) {
                unique.push(p);
            }
        }
        let mut index: BTreeMap<(NodeId, NodeId), Vec<usize>> = BTreeMap::new();
        for (i, p) in unique.iter().enumerate() {
            for w in p.nodes.windows(2) {
                index.entry((w[0], w[1])).or_default().push(i);
            }
        }
        Self { commodity, paths: unique, index }
    }

    pub fn commodity(&self) -> usize {
        self.commodity
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Indices of the paths that use edge `(u, v)`.
    pub fn paths_through(&self, graph: &PayloadGraph, edge: (NodeId, NodeId)) -> Result<&[usize], PathError> {
        if graph.edge_id(edge.0, edge.1).is_none() {
            return Err(PathError::UnknownEdge(edge.0, edge.1));
        }
        Ok(self.index.get(&edge).map(Vec::as_slice).unwrap_or(&[]))
    }

    /// Dump lines of the form `commodity_id: n0->n1->...->nk`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for p in &self.paths {
            let _ = writeln!(out, "{}: {}", self.commodity, p.arrow_string());
        }
        out
    }
}

/// Every simple directed path from the commodity's source to its destination
/// with at most `max_hops` edges, in lexicographic order of node sequence.
pub fn enumerate_paths(graph: &PayloadGraph, commodity: &Commodity, max_hops: usize) -> Result<PathSet, PathError> {
    let n = graph.node_count();
    for node in [commodity.source, commodity.destination] {
        if node >= n {
            return Err(PathError::UnknownNode { commodity: commodity.id, node });
        }
    }
    if commodity.source == commodity.destination {
        return Err(PathError::SameEndpoints(commodity.id));
    }
    if max_hops == 0 {
        return Err(PathError::ZeroHopBound);
    }

    let to_target = distances_to(graph, commodity.destination);
    let mut paths = Vec::new();
    let mut on_path = vec![false; n];
    let mut nodes = vec![commodity.source];
    let mut edges = Vec::new();
    on_path[commodity.source] = true;
    extend(graph, commodity.destination, max_hops, &to_target, &mut on_path, &mut nodes, &mut edges, &mut paths);

    if paths.is_empty() {
        return Err(PathError::NoPathFound {
            commodity: commodity.id,
            origin: commodity.source,
            destination: commodity.destination,
            max_hops,
        });
    }
    Ok(PathSet::from_paths(commodity.id, paths))
}

#[allow(clippy::too_many_arguments)]
fn extend(
    graph: &PayloadGraph,
    target: NodeId,
    max_hops: usize,
    to_target: &[usize],
    on_path: &mut [bool],
    nodes: &mut Vec<NodeId>,
    edges: &mut Vec<EdgeId>,
    out: &mut Vec<Path>,
) {
    let here = nodes[nodes.len() - 1];
    let remaining = max_hops - edges.len();
    for &e in graph.outgoing(here) {
        let next = graph.edge(e).to;
        if on_path[next] || to_target[next] >= remaining {
            continue;
        }
        nodes.push(next);
        edges.push(e);
        if next == target {
            out.push(Path { nodes: nodes.clone(), edges: edges.clone() });
        } else {
            on_path[next] = true;
            extend(graph, target, max_hops, to_target, on_path, nodes, edges, out);
            on_path[next] = false;
        }
        nodes.pop();
        edges.pop();
    }
}

// Reverse BFS; unreachable nodes get usize::MAX.
fn distances_to(graph: &PayloadGraph, target: NodeId) -> Vec<usize> {
    let n = graph.node_count();
    let mut incoming = vec![Vec::new(); n];
    for e in graph.edges() {
        incoming[e.to].push(e.from);
    }
    let mut dist = vec![usize::MAX; n];
    dist[target] = 0;
    let mut queue = std::collections::VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &u in &incoming[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}
