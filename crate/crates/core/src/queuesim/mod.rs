//! Discrete-event simulation of packets crossing the payload.
//!
//! Stations are single-server FIFO queues with tail drop. Because service is
//! FIFO and non-preemptive, a packet's departure time is fixed the moment it
//! is admitted (`max(arrival, previous departure) + service`), so the event
//! calendar only holds packet generations and packet arrivals at the next
//! station. A station keeps the departure times of the packets it holds;
//! those at or before the current time have left.

mod replicate;
pub mod rng;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;
use thiserror::Error;

use crate::maxmin::RoutingTable;
use crate::scenario::{ConfigError, Mode, Scenario, ScenarioViolation, ServiceDist};
use crate::topology::{EdgeId, NodeId};
pub use replicate::{csv_header, run_replications, run_replications_with_seeds, MetricsReport};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("routing table has no entries for commodity {0}")]
    RoutingMismatch(usize),
    #[error("routing entry for commodity {commodity} runs {from}->{to}, expected {origin}->{destination}")]
    RouteEndpoints { commodity: usize, from: NodeId, to: NodeId, origin: NodeId, destination: NodeId },
    #[error("invalid scenario: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidScenario(Vec<ScenarioViolation>),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StationKind {
    Modem(NodeId),
    Link(EdgeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Service {
    Exponential { rate: f64 },
    Fixed { seconds: f64 },
}

impl Service {
    fn minimum(self) -> f64 {
        match self {
            Service::Exponential { .. } => 0.0,
            Service::Fixed { seconds } => seconds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Station {
    pub kind: StationKind,
    pub service: Service,
    /// Waiting room including the packet in service.
    pub buffer: u64,
}

/// Traffic of one commodity: Poisson arrivals and a categorical choice of
/// station sequence per packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub commodity: usize,
    pub rate_pps: f64,
    pub routes: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub stations: Vec<Station>,
    pub flows: Vec<Flow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CommodityMetrics {
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub delay_sum: f64,
    /// Smallest end-to-end delay seen, `INFINITY` when nothing was delivered.
    pub min_delay: f64,
}

impl CommodityMetrics {
    fn empty() -> Self {
        Self { min_delay: f64::INFINITY, ..Self::default() }
    }

    pub fn mean_delay(&self) -> Option<f64> {
        (self.delivered > 0).then(|| self.delay_sum / self.delivered as f64)
    }

    /// `100 * dropped / offered`, 0 when nothing was offered.
    pub fn pli(&self) -> f64 {
        if self.offered == 0 {
            0.0
        } else {
            100.0 * self.dropped as f64 / self.offered as f64
        }
    }

    fn absorb(&mut self, other: &CommodityMetrics) {
        self.offered += other.offered;
        self.delivered += other.delivered;
        self.dropped += other.dropped;
        self.in_flight += other.in_flight;
        self.delay_sum += other.delay_sum;
        self.min_delay = self.min_delay.min(other.min_delay);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub per_commodity: Vec<CommodityMetrics>,
    pub aggregate: CommodityMetrics,
    /// Highest occupancy each station reached.
    pub station_peaks: Vec<u64>,
    pub events: u64,
    /// Events whose time preceded the event that scheduled them.
    pub causality_violations: u64,
    /// FNV-1a over every processed event `(time, kind, flow)`.
    pub trace_digest: u64,
}

impl RunMetrics {
    pub fn mean_delay(&self) -> Option<f64> {
        self.aggregate.mean_delay()
    }

    pub fn pli(&self) -> f64 {
        self.aggregate.pli()
    }
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    flow: u32,
    route: u32,
    hop: u32,
    counted: bool,
    born: f64,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Generate(u32),
    Arrive(Packet),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct StationState {
    departures: VecDeque<f64>,
    last_departure: f64,
    rng: ChaCha8Rng,
    peak: u64,
}

struct FlowState {
    arrivals: ChaCha8Rng,
    routing: ChaCha8Rng,
    chooser: Option<WeightedIndex<f64>>,
}

struct Fnv(u64);

impl Fnv {
    fn eat(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

impl Network {
    /// Station layout for a scenario. Proposed mode: one modem station per
    /// node (ids `0..N`) and one link station per edge (ids `N..N+E`); a
    /// packet is served at its source modem, each link of its path, and its
    /// destination modem. Baseline mode: a single modem station at
    /// `baseline_multiplier * mu` shared by every commodity.
    pub fn from_scenario(scenario: &Scenario, routing: Option<&RoutingTable>) -> Result<Self, SimError> {
        let graph = scenario.build_graph()?;
        let pairs = scenario.endpoints(graph.node_count())?;
        let rates = scenario.arrival_rates();
        let modem = |rate: f64| match scenario.service_dist {
            ServiceDist::Exponential => Service::Exponential { rate },
            ServiceDist::Deterministic => Service::Fixed { seconds: 1.0 / rate },
        };

        if scenario.mode == Mode::Baseline {
            let station = Station {
                kind: StationKind::Modem(0),
                service: modem(scenario.baseline_multiplier as f64 * scenario.mu_pps),
                buffer: scenario.buffer_pkts,
            };
            let flows = rates
                .iter()
                .enumerate()
                .map(|(commodity, &rate_pps)| Flow { commodity, rate_pps, routes: vec![vec![0]], weights: vec![1.0] })
                .collect();
            return Ok(Self { stations: vec![station], flows });
        }

        let n = graph.node_count();
        let mut stations: Vec<Station> = (0..n)
            .map(|node| Station { kind: StationKind::Modem(node), service: modem(scenario.mu_pps), buffer: scenario.buffer_pkts })
            .collect();
        stations.extend(graph.edges().iter().enumerate().map(|(e, edge)| Station {
            kind: StationKind::Link(e),
            service: Service::Fixed { seconds: scenario.packet_bits() / edge.capacity },
            buffer: scenario.buffer_pkts,
        }));

        let routing = routing.ok_or(SimError::RoutingMismatch(0))?;
        let mut flows = Vec::with_capacity(pairs.len());
        for (commodity, (&(source, destination), &rate_pps)) in pairs.iter().zip(&rates).enumerate() {
            let entries = routing.routes(commodity).filter(|r| !r.is_empty()).ok_or(SimError::RoutingMismatch(commodity))?;
            let mut routes = Vec::with_capacity(entries.len());
            let mut weights = Vec::with_capacity(entries.len());
            for entry in entries {
                let path = &entry.path;
                if path.source() != source || path.destination() != destination {
                    return Err(SimError::RouteEndpoints {
                        commodity,
                        from: path.source(),
                        to: path.destination(),
                        origin: source,
                        destination,
                    });
                }
                let mut seq = vec![source];
                for (i, &e) in path.edges().iter().enumerate() {
                    if i > 0 && scenario.transit_service {
                        seq.push(path.nodes()[i]);
                    }
                    seq.push(n + e);
                }
                seq.push(destination);
                routes.push(seq);
                weights.push(entry.probability);
            }
            flows.push(Flow { commodity, rate_pps, routes, weights });
        }
        Ok(Self { stations, flows })
    }

    /// Sum of deterministic service times along a route.
    pub fn route_floor(&self, route: &[usize]) -> f64 {
        route.iter().map(|&s| self.stations[s].service.minimum()).sum()
    }

    pub fn run(&self, config: &RunConfig) -> RunMetrics {
        let RunConfig { horizon, warmup, seed } = *config;
        let mut stations: Vec<StationState> = (0..self.stations.len())
            .map(|s| StationState {
                departures: VecDeque::new(),
                last_departure: f64::NEG_INFINITY,
                rng: rng::stream(seed, rng::SERVICE_STREAM | s as u64),
                peak: 0,
            })
            .collect();
        let mut flows: Vec<FlowState> = self
            .flows
            .iter()
            .enumerate()
            .map(|(f, flow)| FlowState {
                arrivals: rng::stream(seed, rng::ARRIVAL_STREAM | f as u64),
                routing: rng::stream(seed, rng::ROUTING_STREAM | f as u64),
                chooser: (flow.routes.len() > 1).then(|| WeightedIndex::new(&flow.weights).expect("positive route weights")),
            })
            .collect();
        let mut counters = vec![CommodityMetrics::empty(); self.flows.len()];
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut push = |heap: &mut BinaryHeap<Event>, time: f64, kind: EventKind| {
            heap.push(Event { time, seq, kind });
            seq += 1;
        };

        for (f, flow) in self.flows.iter().enumerate() {
            if flow.rate_pps > 0.0 {
                let gap: f64 = Exp1.sample(&mut flows[f].arrivals);
                push(&mut heap, gap / flow.rate_pps, EventKind::Generate(f as u32));
            }
        }

        let mut now = 0.0f64;
        let mut events = 0u64;
        let mut causality_violations = 0u64;
        let mut digest = Fnv(0xcbf2_9ce4_8422_2325);

        while let Some(event) = heap.peek().copied() {
            if event.time > horizon {
                break;
            }
            heap.pop();
            if event.time < now {
                causality_violations += 1;
            }
            now = event.time;
            events += 1;
            digest.eat(now.to_bits());

            let packet = match event.kind {
                EventKind::Generate(f) => {
                    digest.eat(f as u64);
                    let flow = &self.flows[f as usize];
                    let state = &mut flows[f as usize];
                    let route = match &state.chooser {
                        Some(chooser) => chooser.sample(&mut state.routing) as u32,
                        None => 0,
                    };
                    let gap: f64 = Exp1.sample(&mut state.arrivals);
                    push(&mut heap, now + gap / flow.rate_pps, EventKind::Generate(f));
                    let counted = now >= warmup;
                    if counted {
                        counters[f as usize].offered += 1;
                    }
                    Packet { flow: f, route, hop: 0, counted, born: now }
                }
                EventKind::Arrive(p) => {
                    digest.eat(1 << 32 | p.flow as u64);
                    p
                }
            };

            let route = &self.flows[packet.flow as usize].routes[packet.route as usize];
            let sid = route[packet.hop as usize];
            let spec = &self.stations[sid];
            let st = &mut stations[sid];
            while st.departures.front().is_some_and(|&d| d <= now) {
                st.departures.pop_front();
            }
            let tally = &mut counters[packet.flow as usize];
            if st.departures.len() as u64 >= spec.buffer {
                if packet.counted {
                    tally.dropped += 1;
                }
                continue;
            }
            let service = match spec.service {
                Service::Exponential { rate } => {
                    let x: f64 = Exp1.sample(&mut st.rng);
                    x / rate
                }
                Service::Fixed { seconds } => seconds,
            };
            let departure = now.max(st.last_departure) + service;
            st.last_departure = departure;
            st.departures.push_back(departure);
            st.peak = st.peak.max(st.departures.len() as u64);

            if packet.hop as usize + 1 == route.len() {
                if packet.counted {
                    if departure <= horizon {
                        let delay = departure - packet.born;
                        tally.delivered += 1;
                        tally.delay_sum += delay;
                        tally.min_delay = tally.min_delay.min(delay);
                    } else {
                        tally.in_flight += 1;
                    }
                }
            } else {
                push(&mut heap, departure, EventKind::Arrive(Packet { hop: packet.hop + 1, ..packet }));
            }
        }

        for event in heap.iter() {
            if let EventKind::Arrive(p) = event.kind {
                if p.counted {
                    counters[p.flow as usize].in_flight += 1;
                }
            }
        }

        let mut per_commodity = vec![CommodityMetrics::empty(); self.flows.len()];
        for (flow, c) in self.flows.iter().zip(counters) {
            per_commodity[flow.commodity] = c;
        }
        let mut aggregate = CommodityMetrics::empty();
        for c in &per_commodity {
            aggregate.absorb(c);
        }
        RunMetrics {
            seed,
            per_commodity,
            aggregate,
            station_peaks: stations.iter().map(|s| s.peak).collect(),
            events,
            causality_violations,
            trace_digest: digest.0,
        }
    }
}

/// Rejects scenarios that cannot be simulated. A zero arrival rate is
/// allowed here (no traffic is generated) even though the config validator
/// flags it.
fn check_simulable(scenario: &Scenario) -> Result<(), SimError> {
    let violations: Vec<ScenarioViolation> = scenario
        .validate()
        .violations
        .into_iter()
        .filter(|v| match v {
            ScenarioViolation::NonpositiveRate { field, value } => {
                !(*value == 0.0 && (*field == "lambda_pps" || *field == "commodities.pairs rate"))
            }
            ScenarioViolation::TooFewReps(_) => false,
            _ => true,
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(SimError::InvalidScenario(violations))
    }
}

/// One replication of `scenario` with the given run seed.
pub fn simulate(scenario: &Scenario, routing: Option<&RoutingTable>, seed: u64) -> Result<RunMetrics, SimError> {
    check_simulable(scenario)?;
    let network = Network::from_scenario(scenario, routing)?;
    Ok(network.run(&RunConfig { horizon: scenario.horizon_s, warmup: scenario.warmup_s(), seed }))
}
