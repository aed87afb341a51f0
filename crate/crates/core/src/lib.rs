//! Traffic engineering for regenerative satellite payloads built from
//! interconnected modem banks.
//!
//! The crate solves a max-min residual-capacity multicommodity flow over
//! hop-bounded paths to produce routing tables, then evaluates those tables
//! in a discrete-event queueing simulation against single-modem-bank
//! baselines.

#[cfg(feature = "cli")]
pub mod cli;
pub mod maxmin;
pub mod metrics;
pub mod pathgen;
pub mod pipeline;
pub mod queuesim;
pub mod scenario;
pub mod topology;

pub use maxmin::{solve_maxmin, RoutingSolution, RoutingTable};
pub use pathgen::{enumerate_paths, Commodity, Path, PathSet};
pub use queuesim::{run_replications, simulate, MetricsReport, RunMetrics};
pub use scenario::Scenario;
pub use topology::{build_torus, PayloadGraph};
