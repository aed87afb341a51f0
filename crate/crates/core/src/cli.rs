//! `payload-te` command line: `solve`, `run`, `sweep`, `validate`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::maxmin::{RoutingTable, SolveError};
use crate::pipeline::{evaluate, optimize, PipelineError};
use crate::queuesim::{csv_header, MetricsReport, SimError};
use crate::scenario::{GraphSpec, Mode, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_INFEASIBLE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "payload-te", version, about = "Max-min routing and queueing simulation for modem-bank payloads")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDim {
    Lambda,
    Buffer,
    #[value(name = "link_rate")]
    LinkRate,
    #[value(name = "baseline_multiplier")]
    BaselineMultiplier,
}

impl SweepDim {
    fn name(self) -> &'static str {
        match self {
            SweepDim::Lambda => "lambda",
            SweepDim::Buffer => "buffer",
            SweepDim::LinkRate => "link_rate",
            SweepDim::BaselineMultiplier => "baseline_multiplier",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the max-min LP and write the routing table.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Routing-table output file.
        #[arg(long, default_value = "routing.txt")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Simulate replications and report delay and PLI.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Routing table from `solve`; solved inline when omitted.
        #[arg(long)]
        routing: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// Per-run CSV rows are appended here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Sweep one parameter and emit one aggregated row per value.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        dim: SweepDim,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Check a scenario file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// A failed command: exit code plus diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Solve(SolveError::Infeasible { .. }) => EXIT_INFEASIBLE,
            PipelineError::Config(_) => EXIT_PARSE,
            PipelineError::Path(_) => EXIT_VALIDATION,
            PipelineError::Sim(SimError::InvalidScenario(_) | SimError::RoutingMismatch(_) | SimError::RouteEndpoints { .. }) => {
                EXIT_VALIDATION
            }
            _ => EXIT_RUNTIME,
        };
        Failure::new(code, e.to_string())
    }
}

/// Parameter sweep: a base scenario with one dimension varied.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub dimension: SweepDim,
    pub values: Vec<f64>,
    pub output: Option<PathBuf>,
}

impl SweepSpec {
    pub fn check(&self) -> Result<(), String> {
        if self.values.is_empty() {
            return Err("sweep value list is empty".into());
        }
        for &v in &self.values {
            let ok = match self.dimension {
                SweepDim::Lambda => v > 0.0 && v.is_finite(),
                SweepDim::LinkRate => v > 0.0 && v.is_finite() && matches!(self.base.graph, GraphSpec::Torus { .. }),
                SweepDim::Buffer | SweepDim::BaselineMultiplier => v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64,
            };
            if !ok {
                return Err(format!("value {v} is not valid for sweep dimension {}", self.dimension.name()));
            }
        }
        Ok(())
    }

    pub fn point(&self, value: f64) -> Scenario {
        let mut s = self.base.clone();
        match self.dimension {
            SweepDim::Lambda => s.lambda_pps = value,
            SweepDim::Buffer => s.buffer_pkts = value as u64,
            SweepDim::LinkRate => {
                if let GraphSpec::Torus { link_rate_bps, .. } = &mut s.graph {
                    *link_rate_bps = value;
                }
            }
            SweepDim::BaselineMultiplier => {
                s.mode = Mode::Baseline;
                s.baseline_multiplier = value as u32;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub dimension: SweepDim,
    pub value: f64,
    pub scenario_id: String,
    pub report: Result<MetricsReport, String>,
}

pub fn sweep_header() -> &'static str {
    "dimension,value,scenario_id,mode,baseline_multiplier,lambda_pps,buffer_pkts,link_rate_bps,reps,mean_delay_s,delay_ci_s,pli_pct,pli_ci_pct,pooled_pli_pct,status"
}

/// Runs every sweep point in order; failed points are recorded, not fatal.
pub fn run_sweep(spec: &SweepSpec, reps: usize, seed: u64) -> Result<Vec<(Scenario, SweepRow)>, String> {
    spec.check()?;
    Ok(spec
        .values
        .iter()
        .map(|&value| {
            let scenario = spec.point(value);
            let report = {
                let violations = scenario.validate().violations;
                if violations.is_empty() {
                    evaluate(&scenario, None, reps, seed).map_err(|e| e.to_string())
                } else {
                    Err(violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
                }
            };
            let row = SweepRow { dimension: spec.dimension, value, scenario_id: scenario.scenario_id(), report };
            (scenario, row)
        })
        .collect())
}

pub fn sweep_csv(rows: &[(Scenario, SweepRow)]) -> String {
    let mut out = String::from(sweep_header());
    out.push('\n');
    for (s, row) in rows {
        let mode = match s.mode {
            Mode::Proposed => "proposed",
            Mode::Baseline => "baseline",
        };
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},",
            row.dimension.name(),
            row.value,
            row.scenario_id,
            mode,
            s.baseline_multiplier,
            s.lambda_pps,
            s.buffer_pkts,
            s.link_rate_bps().map(|r| r.to_string()).unwrap_or_default(),
        );
        match &row.report {
            Ok(r) => {
                let (d, dci) = r.delay.map(|d| (d.mean.to_string(), d.half_width.to_string())).unwrap_or_default();
                let _ = writeln!(out, "{},{d},{dci},{},{},{},ok", r.reps, r.pli.mean, r.pli.half_width, r.pooled_pli);
            }
            Err(e) => {
                let _ = writeln!(out, ",,,,,,error: {}", e.replace([',', '\n'], ";"));
            }
        }
    }
    out
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", path.display())))?;
    Scenario::parse(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn require_valid(s: &Scenario) -> Result<(), Failure> {
    let report = s.validate();
    if report.is_ok() {
        Ok(())
    } else {
        let lines: Vec<String> = report.violations.iter().map(|v| format!("violation: {v}")).collect();
        Err(Failure::new(EXIT_VALIDATION, lines.join("\n")))
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SolveReport<'a> {
    objective_bps: f64,
    bottleneck: Option<(usize, usize)>,
    residual_bps: Vec<(usize, usize, f64)>,
    pivots: usize,
    routing_file: &'a str,
}

fn cmd_solve(config: &Path, out_path: &Path, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load_scenario(config)?;
    require_valid(&scenario)?;
    let opt = optimize(&scenario)?;
    write_file(out_path, &opt.table.to_text())?;
    let edges = opt.graph.edges();
    let report = SolveReport {
        objective_bps: opt.solution.objective,
        bottleneck: opt.solution.bottleneck().map(|e| (edges[e].from, edges[e].to)),
        residual_bps: edges.iter().zip(&opt.solution.residual).map(|(e, r)| (e.from, e.to, *r)).collect(),
        pivots: opt.solution.pivots,
        routing_file: &out_path.to_string_lossy(),
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
        Format::Csv => {
            let mut t = format!("# min residual z* = {} bit/s\n", report.objective_bps);
            if let Some((u, v)) = report.bottleneck {
                let _ = writeln!(t, "# bottleneck edge {u}->{v}");
            }
            let _ = writeln!(t, "# routing table written to {}", report.routing_file);
            t.push_str("from,to,residual_bps\n");
            for (u, v, r) in &report.residual_bps {
                let _ = writeln!(t, "{u},{v},{r}");
            }
            t
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))
}

fn append_csv(path: &Path, rows: &str, header: &str) -> Result<(), Failure> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", path.display())))?;
    let mut text = String::new();
    if fresh {
        text.push_str(header);
        text.push('\n');
    }
    text.push_str(rows);
    file.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))
}

fn summary(report: &MetricsReport) -> String {
    let mut t = String::new();
    match report.delay {
        Some(d) => {
            let _ = writeln!(t, "mean delay: {:.6e} s +/- {:.3e} s (95% CI, {} reps)", d.mean, d.half_width, report.reps);
        }
        None => {
            let _ = writeln!(t, "mean delay: n/a (no deliveries)");
        }
    }
    let _ = writeln!(t, "PLI: {:.4} % +/- {:.4} % (95% CI); pooled {:.4} %", report.pli.mean, report.pli.half_width, report.pooled_pli);
    t
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config: &Path,
    routing: Option<&Path>,
    seed: Option<u64>,
    reps: Option<usize>,
    csv_out: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let mut scenario = load_scenario(config)?;
    if let Some(r) = reps {
        scenario.reps = r;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    require_valid(&scenario)?;
    let table = match routing {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", p.display())))?;
            let graph = scenario.build_graph().map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
            Some(RoutingTable::parse(&text, &graph).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let report = evaluate(&scenario, table.as_ref(), scenario.reps, scenario.seed)?;
    let rows = report.csv_rows(&scenario);
    if let Some(p) = csv_out {
        append_csv(p, &rows, csv_header())?;
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
        Format::Csv => format!("{}{}\n{}", summary(&report), csv_header(), rows),
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: &Path,
    dim: SweepDim,
    values: Vec<f64>,
    seed: Option<u64>,
    reps: Option<usize>,
    csv_out: Option<PathBuf>,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let base = load_scenario(config)?;
    let spec = SweepSpec { base, dimension: dim, values, output: csv_out };
    let reps = reps.unwrap_or(spec.base.reps);
    let seed = seed.unwrap_or(spec.base.seed);
    let rows = run_sweep(&spec, reps, seed).map_err(|e| Failure::new(EXIT_VALIDATION, e))?;
    let text = match format {
        Format::Csv => sweep_csv(&rows),
        Format::Json => {
            let plain: Vec<&SweepRow> = rows.iter().map(|(_, r)| r).collect();
            serde_json::to_string_pretty(&plain).expect("serializable") + "\n"
        }
    };
    match &spec.output {
        Some(p) => write_file(p, &text),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string())),
    }
}

fn cmd_validate(config: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load_scenario(config)?;
    let report = scenario.validate();
    let mut text = String::new();
    for w in &report.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    if report.is_ok() {
        text.push_str("ok\n");
        out.write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))
    } else {
        for v in &report.violations {
            let _ = writeln!(text, "violation: {v}");
        }
        Err(Failure::new(EXIT_VALIDATION, text.trim_end()))
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { config, out: table, format } => cmd_solve(&config, &table, format, out),
        Command::Run { config, routing, seed, reps, out: csv, format } => {
            cmd_run(&config, routing.as_deref(), seed, reps, csv.as_deref(), format, out)
        }
        Command::Sweep { config, dim, values, seed, reps, out: csv, format } => {
            cmd_sweep(&config, dim, values, seed, reps, csv, format, out)
        }
        Command::Validate { config } => cmd_validate(&config, out),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
