//! Scenario configuration: the flat key-value file format, validation, the
//! reference presets and the centralized single-modem-bank baselines.
//!
//! A scenario file is a list of `key = value` lines; `#` starts a comment.
//! Keys are written in a fixed order so that serialising a parsed file gives
//! back the same bytes.

use std::fmt;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::pathgen::Commodity;
use crate::topology::{build_torus, NodeId, PayloadGraph, TopologyError};

pub const REFERENCE_PACKET_BYTES: u32 = 1500;
pub const REFERENCE_COMMODITIES: usize = 8;
pub const REFERENCE_MU_PPS: f64 = 100_000.0;
pub const REFERENCE_BUFFERS: [u64; 2] = [10_000, 1_000_000];
pub const REFERENCE_LINK_RATES: [f64; 2] = [1e9, 10e9];
pub const REFERENCE_LAMBDAS: [f64; 7] = [30e3, 40e3, 50e3, 60e3, 70e3, 80e3, 90e3];
pub const REFERENCE_MULTIPLIERS: [u32; 3] = [2, 4, 8];
pub const DEFAULT_PLACEMENT_SEED: u64 = 1;
pub const DEFAULT_MAX_HOPS: usize = 6;
pub const DEFAULT_REPS: usize = 10;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("reading edge list {path}: {msg}")]
    EdgeList { path: String, msg: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("cannot place {count} commodities on distinct endpoints of a {nodes}-node graph")]
    Placement { count: usize, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ServiceDist {
    Exponential,
    Deterministic,
}

impl ServiceDist {
    fn as_str(self) -> &'static str {
        match self {
            ServiceDist::Exponential => "exponential",
            ServiceDist::Deterministic => "deterministic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Interconnected modem banks routed by the max-min LP.
    Proposed,
    /// One modem bank serving every commodity at `baseline_multiplier * mu`.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GraphSpec {
    Torus { rows: usize, cols: usize, link_rate_bps: f64 },
    EdgeList { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endpoint {
    pub source: NodeId,
    pub destination: NodeId,
    /// Overrides the scenario-wide arrival rate.
    pub lambda_pps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CommoditySpec {
    /// Sources `0..count`, destinations `count..2*count` shuffled by the seed.
    Generated {
        count: usize,
        placement_seed: u64,
    },
    Explicit(Vec<Endpoint>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub graph: GraphSpec,
    pub commodities: CommoditySpec,
    pub lambda_pps: f64,
    pub packet_bytes: u32,
    pub mu_pps: f64,
    pub service_dist: ServiceDist,
    pub buffer_pkts: u64,
    pub max_hops: usize,
    pub horizon_s: f64,
    pub warmup_frac: f64,
    pub reps: usize,
    pub seed: u64,
    pub mode: Mode,
    pub baseline_multiplier: u32,
    /// Charge modem service at intermediate banks as well.
    pub transit_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioViolation {
    NonpositiveRate { field: &'static str, value: f64 },
    InvalidDimension { rows: usize, cols: usize },
    ZeroBuffer,
    ZeroHopBound,
    WarmupOutOfRange(f64),
    TooFewReps(usize),
    ZeroMultiplier,
    NoCommodities,
    UnknownNode { commodity: usize, node: NodeId },
    SameEndpoints { commodity: usize },
    Placement { count: usize, nodes: usize },
    Graph(String),
}

impl fmt::Display for ScenarioViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonpositiveRate { field, value } => write!(f, "nonpositive rate: {field} = {value}"),
            Self::InvalidDimension { rows, cols } => write!(f, "torus dimensions {rows}x{cols} must both be >= 2"),
            Self::ZeroBuffer => write!(f, "buffer_pkts must be >= 1"),
            Self::ZeroHopBound => write!(f, "max_hops must be >= 1"),
            Self::WarmupOutOfRange(w) => write!(f, "warmup_frac {w} outside [0, 0.5]"),
            Self::TooFewReps(n) => write!(f, "reps = {n}, need at least 2 for a confidence interval"),
            Self::ZeroMultiplier => write!(f, "baseline_multiplier must be >= 1"),
            Self::NoCommodities => write!(f, "no commodities"),
            Self::UnknownNode { commodity, node } => write!(f, "unknown node {node} in commodity {commodity}"),
            Self::SameEndpoints { commodity } => write!(f, "commodity {commodity} has source equal to destination"),
            Self::Placement { count, nodes } => {
                write!(f, "{count} commodities need {} distinct endpoints, graph has {nodes} nodes", 2 * count)
            }
            Self::Graph(msg) => write!(f, "graph: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<ScenarioViolation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Scenario {
    /// 4x4 torus, 8 commodities, 1500-byte packets, mu = 100k packets/s.
    pub fn reference_preset(buffer_pkts: u64, link_rate_bps: f64, lambda_pps: f64) -> Self {
        Self {
            graph: GraphSpec::Torus { rows: 4, cols: 4, link_rate_bps },
            commodities: CommoditySpec::Generated { count: REFERENCE_COMMODITIES, placement_seed: DEFAULT_PLACEMENT_SEED },
            lambda_pps,
            packet_bytes: REFERENCE_PACKET_BYTES,
            mu_pps: REFERENCE_MU_PPS,
            service_dist: ServiceDist::Exponential,
            buffer_pkts,
            max_hops: DEFAULT_MAX_HOPS,
            horizon_s: 1.0,
            warmup_frac: 0.1,
            reps: DEFAULT_REPS,
            seed: DEFAULT_SEED,
            mode: Mode::Proposed,
            baseline_multiplier: 2,
            transit_service: false,
        }
    }

    /// Whether the preset parameters are one of the reference grid points.
    pub fn is_reference_grid_point(buffer_pkts: u64, link_rate_bps: f64, lambda_pps: f64) -> bool {
        REFERENCE_BUFFERS.contains(&buffer_pkts) && REFERENCE_LINK_RATES.contains(&link_rate_bps) && REFERENCE_LAMBDAS.contains(&lambda_pps)
    }

    /// Same traffic, served by a single modem bank at `multiplier * mu`.
    pub fn baseline_single(multiplier: u32, base: &Scenario) -> Self {
        Self { mode: Mode::Baseline, baseline_multiplier: multiplier, ..base.clone() }
    }

    pub fn packet_bits(&self) -> f64 {
        self.packet_bytes as f64 * 8.0
    }

    pub fn warmup_s(&self) -> f64 {
        self.horizon_s * self.warmup_frac
    }

    pub fn commodity_count(&self) -> usize {
        match &self.commodities {
            CommoditySpec::Generated { count, .. } => *count,
            CommoditySpec::Explicit(list) => list.len(),
        }
    }

    /// Per-commodity arrival rates in packets/s.
    pub fn arrival_rates(&self) -> Vec<f64> {
        match &self.commodities {
            CommoditySpec::Generated { count, .. } => vec![self.lambda_pps; *count],
            CommoditySpec::Explicit(list) => list.iter().map(|e| e.lambda_pps.unwrap_or(self.lambda_pps)).collect(),
        }
    }

    pub fn link_rate_bps(&self) -> Option<f64> {
        match self.graph {
            GraphSpec::Torus { link_rate_bps, .. } => Some(link_rate_bps),
            GraphSpec::EdgeList { .. } => None,
        }
    }

    pub fn build_graph(&self) -> Result<PayloadGraph, ConfigError> {
        match &self.graph {
            GraphSpec::Torus { rows, cols, link_rate_bps } => Ok(build_torus(*rows, *cols, *link_rate_bps)?),
            GraphSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::EdgeList { path: path.clone(), msg: e.to_string() })?;
                PayloadGraph::parse_edge_list(&text).map_err(|e| ConfigError::EdgeList { path: path.clone(), msg: e.to_string() })
            }
        }
    }

    /// Source/destination pairs, before any validation against a graph.
    pub fn endpoints(&self, node_count: usize) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
        match &self.commodities {
            CommoditySpec::Generated { count, placement_seed } => placement(*count, *placement_seed, node_count),
            CommoditySpec::Explicit(list) => Ok(list.iter().map(|e| (e.source, e.destination)).collect()),
        }
    }

    /// Commodities with demand `lambda * packet_bits` bit/s.
    pub fn build_commodities(&self, graph: &PayloadGraph) -> Result<Vec<Commodity>, ConfigError> {
        let pairs = self.endpoints(graph.node_count())?;
        Ok(pairs
            .into_iter()
            .zip(self.arrival_rates())
            .enumerate()
            .map(|(id, ((source, destination), lambda))| Commodity { id, source, destination, demand: lambda * self.packet_bits() })
            .collect())
    }

    /// Fluid estimate of the time a baseline station takes to fill its
    /// buffer from empty. `None` when the station is not overloaded.
    pub fn baseline_fill_time(&self) -> Option<f64> {
        let offered: f64 = self.arrival_rates().iter().sum();
        let capacity = self.baseline_multiplier as f64 * self.mu_pps;
        (offered > capacity).then(|| self.buffer_pkts as f64 / (offered - capacity))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let v = &mut report.violations;
        let mut positive = |field: &'static str, value: f64| {
            if !(value > 0.0 && value.is_finite()) {
                v.push(ScenarioViolation::NonpositiveRate { field, value });
            }
        };
        positive("lambda_pps", self.lambda_pps);
        positive("mu_pps", self.mu_pps);
        positive("packet_bytes", self.packet_bytes as f64);
        positive("horizon_s", self.horizon_s);
        if let CommoditySpec::Explicit(list) = &self.commodities {
            for e in list {
                if let Some(l) = e.lambda_pps {
                    positive("commodities.pairs rate", l);
                }
            }
        }
        if let GraphSpec::Torus { rows, cols, link_rate_bps } = self.graph {
            positive("graph.link_rate_bps", link_rate_bps);
            if rows < 2 || cols < 2 {
                v.push(ScenarioViolation::InvalidDimension { rows, cols });
            }
        }
        if self.buffer_pkts == 0 {
            v.push(ScenarioViolation::ZeroBuffer);
        }
        if self.max_hops == 0 {
            v.push(ScenarioViolation::ZeroHopBound);
        }
        if !(0.0..=0.5).contains(&self.warmup_frac) {
            v.push(ScenarioViolation::WarmupOutOfRange(self.warmup_frac));
        }
        if self.reps < 2 {
            v.push(ScenarioViolation::TooFewReps(self.reps));
        }
        if self.baseline_multiplier == 0 {
            v.push(ScenarioViolation::ZeroMultiplier);
        }
        if self.commodity_count() == 0 {
            v.push(ScenarioViolation::NoCommodities);
        }
        if !report.violations.is_empty() {
            return report;
        }

        let graph = match self.build_graph() {
            Ok(g) => g,
            Err(e) => {
                report.violations.push(ScenarioViolation::Graph(e.to_string()));
                return report;
            }
        };
        let pairs = match self.endpoints(graph.node_count()) {
            Ok(p) => p,
            Err(_) => {
                report.violations.push(ScenarioViolation::Placement { count: self.commodity_count(), nodes: graph.node_count() });
                return report;
            }
        };
        for (commodity, &(s, t)) in pairs.iter().enumerate() {
            for node in [s, t] {
                if node >= graph.node_count() {
                    report.violations.push(ScenarioViolation::UnknownNode { commodity, node });
                }
            }
            if s == t {
                report.violations.push(ScenarioViolation::SameEndpoints { commodity });
            }
        }
        if report.violations.is_empty() && self.mode == Mode::Proposed {
            if let Ok(commodities) = self.build_commodities(&graph) {
                if let Some(hint) = crate::maxmin::infeasibility_hint(&graph, &commodities) {
                    report.warnings.push(hint);
                }
            }
        }
        report
    }

    /// Stable identifier: FNV-1a of the serialised scenario.
    pub fn scenario_id(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_config_string().bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.graph {
            GraphSpec::Torus { rows, cols, link_rate_bps } => {
                kv("graph.rows", rows.to_string());
                kv("graph.cols", cols.to_string());
                kv("graph.link_rate_bps", link_rate_bps.to_string());
            }
            GraphSpec::EdgeList { path } => kv("graph.edge_list", path.clone()),
        }
        match &self.commodities {
            CommoditySpec::Generated { count, placement_seed } => {
                kv("commodities.count", count.to_string());
                kv("commodities.placement_seed", placement_seed.to_string());
            }
            CommoditySpec::Explicit(list) => {
                let pairs: Vec<String> = list
                    .iter()
                    .map(|e| match e.lambda_pps {
                        Some(l) => format!("{}>{}@{}", e.source, e.destination, l),
                        None => format!("{}>{}", e.source, e.destination),
                    })
                    .collect();
                kv("commodities.pairs", pairs.join(", "));
            }
        }
        kv("lambda_pps", self.lambda_pps.to_string());
        kv("packet_bytes", self.packet_bytes.to_string());
        kv("mu_pps", self.mu_pps.to_string());
        kv("service_dist", self.service_dist.as_str().to_string());
        kv("buffer_pkts", self.buffer_pkts.to_string());
        kv("max_hops", self.max_hops.to_string());
        kv("horizon_s", self.horizon_s.to_string());
        kv("warmup_frac", self.warmup_frac.to_string());
        kv("reps", self.reps.to_string());
        kv("seed", self.seed.to_string());
        kv(
            "mode",
            match self.mode {
                Mode::Proposed => "proposed",
                Mode::Baseline => "baseline",
            }
            .to_string(),
        );
        kv("baseline_multiplier", self.baseline_multiplier.to_string());
        if self.transit_service {
            kv("transit_service", "on".to_string());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = std::collections::BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line: i + 1, msg: format!("expected `key = value`, got {line:?}") })?;
            let key = k.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::Parse { line: i + 1, msg: format!("unknown key `{key}`") });
            }
            if map.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(ConfigError::Parse { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
        }
        let fields = Fields(map);

        let graph = if let Some((_, path)) = fields.0.get("graph.edge_list") {
            GraphSpec::EdgeList { path: path.clone() }
        } else {
            GraphSpec::Torus {
                rows: fields.req("graph.rows")?,
                cols: fields.req("graph.cols")?,
                link_rate_bps: fields.req("graph.link_rate_bps")?,
            }
        };
        let commodities = if let Some((line, pairs)) = fields.0.get("commodities.pairs") {
            CommoditySpec::Explicit(parse_pairs(pairs).map_err(|msg| ConfigError::Parse { line: *line, msg })?)
        } else {
            CommoditySpec::Generated {
                count: fields.req("commodities.count")?,
                placement_seed: fields.opt("commodities.placement_seed")?.unwrap_or(DEFAULT_PLACEMENT_SEED),
            }
        };
        let service_dist = match fields.opt::<String>("service_dist")?.as_deref() {
            None | Some("exponential") => ServiceDist::Exponential,
            Some("deterministic") => ServiceDist::Deterministic,
            Some(other) => return Err(fields.bad("service_dist", format!("expected exponential|deterministic, got {other:?}"))),
        };
        let mode = match fields.opt::<String>("mode")?.as_deref() {
            None | Some("proposed") => Mode::Proposed,
            Some("baseline") => Mode::Baseline,
            Some(other) => return Err(fields.bad("mode", format!("expected proposed|baseline, got {other:?}"))),
        };
        let transit_service = match fields.opt::<String>("transit_service")?.as_deref() {
            None | Some("off") => false,
            Some("on") => true,
            Some(other) => return Err(fields.bad("transit_service", format!("expected on|off, got {other:?}"))),
        };
        Ok(Self {
            graph,
            commodities,
            lambda_pps: fields.req("lambda_pps")?,
            packet_bytes: fields.opt("packet_bytes")?.unwrap_or(REFERENCE_PACKET_BYTES),
            mu_pps: fields.opt("mu_pps")?.unwrap_or(REFERENCE_MU_PPS),
            service_dist,
            buffer_pkts: fields.req("buffer_pkts")?,
            max_hops: fields.opt("max_hops")?.unwrap_or(DEFAULT_MAX_HOPS),
            horizon_s: fields.opt("horizon_s")?.unwrap_or(1.0),
            warmup_frac: fields.opt("warmup_frac")?.unwrap_or(0.1),
            reps: fields.opt("reps")?.unwrap_or(DEFAULT_REPS),
            seed: fields.opt("seed")?.unwrap_or(DEFAULT_SEED),
            mode,
            baseline_multiplier: fields.opt("baseline_multiplier")?.unwrap_or(2),
            transit_service,
        })
    }
}

const KNOWN_KEYS: [&str; 20] = [
    "graph.rows",
    "graph.cols",
    "graph.link_rate_bps",
    "graph.edge_list",
    "commodities.count",
    "commodities.placement_seed",
    "commodities.pairs",
    "lambda_pps",
    "packet_bytes",
    "mu_pps",
    "service_dist",
    "buffer_pkts",
    "max_hops",
    "horizon_s",
    "warmup_frac",
    "reps",
    "seed",
    "mode",
    "baseline_multiplier",
    "transit_service",
];

struct Fields(std::collections::BTreeMap<String, (usize, String)>);

impl Fields {
    fn bad(&self, key: &str, msg: String) -> ConfigError {
        let line = self.0.get(key).map(|(l, _)| *l).unwrap_or(0);
        ConfigError::Parse { line, msg: format!("`{key}`: {msg}") }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse().map(Some).map_err(|_| ConfigError::Parse { line: *line, msg: format!("`{key}`: cannot parse {v:?}") })
            }
        }
    }

    fn req<T: std::str::FromStr>(&self, key: &'static str) -> Result<T, ConfigError> {
        self.opt(key)?.ok_or(ConfigError::MissingKey(key))
    }
}

fn parse_pairs(text: &str) -> Result<Vec<Endpoint>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (pair, rate) = match item.split_once('@') {
                Some((p, r)) => (p, Some(r.trim().parse::<f64>().map_err(|_| format!("bad rate in {item:?}"))?)),
                None => (item, None),
            };
            let (s, t) = pair.split_once('>').ok_or_else(|| format!("expected `src>dst`, got {item:?}"))?;
            Ok(Endpoint {
                source: s.trim().parse().map_err(|_| format!("bad node in {item:?}"))?,
                destination: t.trim().parse().map_err(|_| format!("bad node in {item:?}"))?,
                lambda_pps: rate,
            })
        })
        .collect()
}

/// Sources `0..count`, destinations a ChaCha8 Fisher-Yates shuffle of
/// `count..2*count`, so every bank terminates at most one commodity.
pub fn placement(count: usize, seed: u64, node_count: usize) -> Result<Vec<(NodeId, NodeId)>, ConfigError> {
    if 2 * count > node_count {
        return Err(ConfigError::Placement { count, nodes: node_count });
    }
    let mut destinations: Vec<NodeId> = (count..2 * count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    destinations.shuffle(&mut rng);
    Ok((0..count).zip(destinations).collect())
}
