use serde::Serialize;

use super::rng::split_seed;
use super::{check_simulable, Network, RunConfig, RunMetrics, SimError};
use crate::maxmin::RoutingTable;
use crate::metrics::{confidence_interval, SampleStats};
use crate::scenario::Scenario;

/// Replication summary: mean and 95% CI of the per-run mean delay and PLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scenario_id: String,
    pub reps: usize,
    /// `None` when fewer than two runs delivered any packet.
    pub delay: Option<SampleStats>,
    pub pli: SampleStats,
    /// Total drops over total offered packets across all runs, percent.
    pub pooled_pli: f64,
    pub runs: Vec<RunMetrics>,
}

impl MetricsReport {
    fn from_runs(scenario: &Scenario, runs: Vec<RunMetrics>) -> Self {
        let delays: Vec<f64> = runs.iter().filter_map(RunMetrics::mean_delay).collect();
        let plis: Vec<f64> = runs.iter().map(RunMetrics::pli).collect();
        let offered: u64 = runs.iter().map(|r| r.aggregate.offered).sum();
        let dropped: u64 = runs.iter().map(|r| r.aggregate.dropped).sum();
        let pli = confidence_interval(&plis).unwrap_or(SampleStats {
            n: plis.len(),
            mean: plis.first().copied().unwrap_or(0.0),
            std_dev: 0.0,
            half_width: f64::INFINITY,
        });
        Self {
            scenario_id: scenario.scenario_id(),
            reps: runs.len(),
            delay: confidence_interval(&delays).ok(),
            pli,
            pooled_pli: if offered == 0 { 0.0 } else { 100.0 * dropped as f64 / offered as f64 },
            runs,
        }
    }

    /// One CSV row per run, in replication order.
    pub fn csv_rows(&self, scenario: &Scenario) -> String {
        let mut out = String::new();
        for run in &self.runs {
            out.push_str(&csv_row(scenario, &self.scenario_id, run));
            out.push('\n');
        }
        out
    }
}

/// Column names of the per-run CSV.
pub fn csv_header() -> &'static str {
    "scenario_id,seed,lambda_pps,buffer_pkts,link_rate_bps,mean_delay_s,pli_pct,offered,delivered,dropped"
}

fn csv_row(scenario: &Scenario, id: &str, run: &RunMetrics) -> String {
    format!(
        "{id},{},{},{},{},{},{},{},{},{}",
        run.seed,
        scenario.lambda_pps,
        scenario.buffer_pkts,
        scenario.link_rate_bps().map(|r| r.to_string()).unwrap_or_default(),
        run.mean_delay().map(|d| d.to_string()).unwrap_or_default(),
        run.pli(),
        run.aggregate.offered,
        run.aggregate.delivered,
        run.aggregate.dropped,
    )
}

/// Runs `n_reps` replications with seeds `split_seed(base_seed, i)`.
pub fn run_replications(
    scenario: &Scenario,
    routing: Option<&RoutingTable>,
    n_reps: usize,
    base_seed: u64,
) -> Result<MetricsReport, SimError> {
    let seeds: Vec<u64> = (0..n_reps as u64).map(|i| split_seed(base_seed, i)).collect();
    run_replications_with_seeds(scenario, routing, &seeds)
}

/// Runs one replication per explicit seed.
pub fn run_replications_with_seeds(scenario: &Scenario, routing: Option<&RoutingTable>, seeds: &[u64]) -> Result<MetricsReport, SimError> {
    check_simulable(scenario)?;
    let network = Network::from_scenario(scenario, routing)?;
    let config = |seed| RunConfig { horizon: scenario.horizon_s, warmup: scenario.warmup_s(), seed };
    #[cfg(feature = "parallel")]
    let runs: Vec<RunMetrics> = {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| network.run(&config(s))).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<RunMetrics> = seeds.iter().map(|&s| network.run(&config(s))).collect();
    Ok(MetricsReport::from_runs(scenario, runs))
}
