//! `edgeplace`: trace generation, one-shot placement, simulation and
//! reporting for service placement on vehicular edge servers.
//!
//! Exit codes: 0 on success, 1 on domain errors (one `error: kind=...` line
//! on stderr), 2 on usage errors.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use edgeplace::optimizer::ObjectiveKind;
use edgeplace::sim::PolicyKind;
use edgeplace::ScenarioConfig;

#[derive(Debug, Parser)]
#[command(
    name = "edgeplace",
    version,
    about = "Delay- and utilization-aware service placement on vehicular edge servers",
    after_help = scenario_defaults_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic random-waypoint trace as CSV (time,vehicle_id,x,y,speed).
    GenTrace(GenTraceArgs),
    /// Solve one placement snapshot and print the optimal placement.
    Solve(SolveArgs),
    /// Run the per-tick control loop and write tick and summary CSV files.
    #[command(after_help = scenario_defaults_help())]
    Simulate(SimulateArgs),
    /// Build fairness/utilization tables and delay series from simulation outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario TOML file; keys it sets override the built-in defaults
    /// [default: built-in reference scenario]
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random choice [default: rng_seed from --config, else 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct GenTraceArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output CSV path, `-` for stdout
    #[arg(long, value_name = "PATH", default_value = "trace.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem snapshot (TOML): services, edges, delay model, objective and
    /// either requests or an explicit delay_ms matrix with demand
    #[arg(long, value_name = "PATH")]
    problem: PathBuf,
    /// Override the objective named in the problem file [default: from the problem file]
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Use exhaustive enumeration instead of branch and bound [default: off]
    #[arg(long)]
    brute_force: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Placement policy
    #[arg(long, value_enum, default_value_t = PolicyArg::Rl)]
    policy: PolicyArg,
    /// Optimization objective: delay (sum of service delays) or su (server utilization)
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Delay)]
    objective: ObjectiveArg,
    /// Mobility source: `synthetic`, `csv:PATH` or `fcd:PATH`
    #[arg(long, value_name = "SOURCE", default_value = "synthetic")]
    trace: TraceArg,
    /// Number of trials; trial k uses seed + k - 1
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Run all four policy/objective arms with 5 trials each and write the
    /// fairness and utilization tables; --policy, --objective and --trials are
    /// ignored [default: off]
    #[arg(long)]
    repro_paper: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory written by `simulate` (repeatable, at least one required)
    #[arg(long, value_name = "DIR", required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "report")]
    out: PathBuf,
    /// Arms that must be present, comma separated (static_delay, rl_delay,
    /// static_su, rl_su) or `all` [default: none]
    #[arg(long, value_name = "ARMS", value_delimiter = ',')]
    require: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// One placement at the first tick, never revised
    Static,
    /// Q-learning monitor that re-optimizes on degradation or violation
    Rl,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Static => PolicyKind::Static,
            PolicyArg::Rl => PolicyKind::RlDynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    /// Minimize the sum of per-service average delays
    Delay,
    /// Minimize demand-weighted server utilization
    Su,
}

impl From<ObjectiveArg> for ObjectiveKind {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Delay => ObjectiveKind::Delay,
            ObjectiveArg::Su => ObjectiveKind::Utilization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TraceArg {
    Synthetic,
    Csv(PathBuf),
    Fcd(PathBuf),
}

impl FromStr for TraceArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "synthetic" => Ok(TraceArg::Synthetic),
            Some(("csv", p)) if !p.is_empty() => Ok(TraceArg::Csv(p.into())),
            Some(("fcd", p)) if !p.is_empty() => Ok(TraceArg::Fcd(p.into())),
            _ => Err(format!("expected synthetic, csv:PATH or fcd:PATH, got '{s}'")),
        }
    }
}

fn list<T: std::fmt::Display>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// The reference scenario, printed under `--help`.
fn scenario_defaults_help() -> String {
    let c = ScenarioConfig::default();
    let m = &c.mobility;
    format!(
        "Scenario defaults (override any key with --config):\n  \
         services                  {n_s}\n  \
         resource demand R_s       [{r}]\n  \
         delay threshold D_s (ms)  [{d}]\n  \
         edges                     {n_e}, first {n_e} sites of a {isd} m grid\n  \
         capacity C_i              [{cap}]\n  \
         UE limit N_i              [{ue}]\n  \
         vehicles                  {veh}\n  \
         horizon (s)               {h}\n  \
         monitor interval (s)      {mi}\n  \
         learning rate alpha       {a}\n  \
         discount gamma            {g}\n  \
         violation penalty         {p}\n  \
         balance offset beta       {b}\n  \
         churn rate                {churn}\n  \
         delay model               base {d0} ms + {ka} ms/km access + {kb} ms/km backhaul\n  \
         area (m)                  {w:.2} x {hh:.2}\n  \
         speed (m/s)               {smin}..{smax}",
        n_s = c.services.len(),
        r = list(c.services.iter().map(|s| s.resource_demand)),
        d = list(c.services.iter().map(|s| s.delay_threshold)),
        n_e = c.edges.len(),
        isd = c.isd,
        cap = list(c.edges.iter().map(|e| e.capacity)),
        ue = list(c.edges.iter().map(|e| e.ue_limit)),
        veh = c.vehicle_count,
        h = c.horizon,
        mi = c.monitor_interval,
        a = c.learning_rate,
        g = c.discount,
        p = c.violation_penalty,
        b = c.balance_offset,
        churn = c.churn_rate,
        d0 = c.delay.base_delay,
        ka = c.delay.access_coeff,
        kb = c.delay.backhaul_coeff,
        w = m.area.width,
        hh = m.area.height,
        smin = m.speed_min,
        smax = m.speed_max,
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version go to stdout with 0, usage errors to stderr with 2.
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::GenTrace(a) => commands::gen_trace(a),
        Command::Solve(a) => commands::solve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(1)
        }
    }
}
