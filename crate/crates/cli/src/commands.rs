//! Subcommand implementations.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use edgeplace::metrics::{compare_report, ArmTable, MetricsError};
use edgeplace::mobility::{emit_csv, generate_synthetic, parse_csv_trace, parse_fcd};
use edgeplace::optimizer::{brute_force_solve, solve as solve_problem};
use edgeplace::problem_file::ProblemFile;
use edgeplace::report::{
    delay_series, delay_series_file_name, delay_series_from_rows, read_summary, read_ticks, save, tables_from_rows,
    ticks_file_name, write_arm_table, write_delay_series, write_summary, write_ticks, SummaryRow, FAIRNESS_FILE,
    SUMMARY_FILE, UTILIZATION_FILE,
};
use edgeplace::sim::{run_trials, Arm, TraceSource, TrialRun, TrialSet};
use edgeplace::{ScenarioConfig, Trace, ValidScenario};

use crate::error::Failure;
use crate::{GenTraceArgs, ReportArgs, ScenarioArgs, SimulateArgs, SolveArgs, TraceArg};

/// Trials per arm under `--repro-paper`.
const REPRO_TRIALS: usize = 5;

type Result<T> = std::result::Result<T, Failure>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Failure::io(path, e))
}

/// Scenario from the built-in defaults overlaid with `--config`, and the seed.
fn load_scenario(args: &ScenarioArgs) -> Result<(ValidScenario, u64)> {
    let text = match &args.config {
        Some(path) => read_text(path)?,
        None => String::new(),
    };
    let scenario = ScenarioConfig::from_toml_str(&text)
        .and_then(|c| Ok(c.validate()?))
        .map_err(|e| {
            let f = Failure::from(e);
            match &args.config {
                Some(p) => f.with("path", format!("{:?}", p.display().to_string())),
                None => f,
            }
        })?;
    let seed = args.seed.unwrap_or(scenario.rng_seed);
    Ok((scenario.with_seed(seed), seed))
}

fn load_trace(arg: &TraceArg) -> Result<TraceSource<f64>> {
    let (path, samples) = match arg {
        TraceArg::Synthetic => return Ok(TraceSource::Synthetic),
        TraceArg::Csv(p) => (p, parse_csv_trace(read_text(p)?.as_bytes())),
        TraceArg::Fcd(p) => (p, parse_fcd(read_text(p)?.as_bytes())),
    };
    let with_path = |f: Failure| f.with("path", format!("{:?}", path.display().to_string()));
    let samples = samples.map_err(|e| with_path(e.into()))?;
    let trace = Trace::new(samples).map_err(|e| with_path(e.into()))?;
    Ok(TraceSource::Recorded(trace))
}

fn store(
    path: &Path,
    write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), edgeplace::report::ReportError>,
) -> Result<()> {
    save(path, write).map_err(|e| match e {
        edgeplace::report::ReportError::Io(io) => Failure::io(path, io),
        other => other.into(),
    })
}

pub fn gen_trace(args: GenTraceArgs) -> Result<()> {
    let (scenario, seed) = load_scenario(&args.scenario)?;
    let samples = generate_synthetic(&scenario.mobility, scenario.vehicle_count, scenario.horizon, seed);
    let mut buf = Vec::new();
    emit_csv(&samples, &mut buf)?;
    if args.out.as_os_str() == "-" {
        std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Failure::io(Path::new("-"), e))?;
    } else {
        if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        edgeplace::report::write_file_atomic(&args.out, &buf).map_err(|e| Failure::io(&args.out, e))?;
        println!(
            "wrote {} samples ({} vehicles, {} s, seed {seed}) to {}",
            samples.len(),
            scenario.vehicle_count,
            scenario.horizon,
            args.out.display()
        );
    }
    Ok(())
}

fn na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn solve(args: SolveArgs) -> Result<()> {
    let mut file: ProblemFile<f64> = ProblemFile::load(&args.problem)?;
    if let Some(o) = args.objective {
        file.objective = o.into();
    }
    let problem = file.to_problem()?;
    let solution = if args.brute_force {
        brute_force_solve(&problem)?
    } else {
        solve_problem(&problem)?
    };
    println!(
        "objective={} value={} placement={} evaluated={}",
        problem.objective().as_str(),
        solution.objective_value,
        solution.placement,
        solution.evaluated
    );
    for (s, spec) in problem.services().iter().enumerate() {
        let edge = &problem.edges()[solution.placement.hosts()[s].0];
        println!(
            "service={} edge={} demand={} delay_ms={} threshold_ms={} resource={} capacity={}",
            spec.id,
            edge.id,
            problem.demand().0[s],
            na(solution.service_delays[s].mean()),
            spec.delay_threshold,
            spec.resource_demand,
            edge.capacity
        );
    }
    Ok(())
}

fn write_runs(dir: &Path, set: &TrialSet<f64>) -> Result<()> {
    create_dir(dir)?;
    for run in &set.runs {
        store(&dir.join(ticks_file_name(run.trial)), |b| write_ticks(&run.ticks, b))?;
    }
    let runs: Vec<&TrialRun<f64>> = set.runs.iter().collect();
    store(&dir.join(SUMMARY_FILE), |b| write_summary(&runs, &[&set.average], b))
}

fn print_trial(run: &TrialRun<f64>) {
    let s = &run.summary;
    println!(
        "{} trial={} seed={} jain={} mean_util_pct={:.4} violations={} reopts={} resolve_failures={}",
        run.arm.label(),
        run.trial,
        run.seed,
        s.jain_index.map_or_else(|| "NA".into(), |j| format!("{j:.4}")),
        s.mean_utilization_pct,
        s.violation_ticks,
        s.reopt_count,
        s.resolve_failures
    );
}

fn print_table(title: &str, table: &ArmTable<f64>) {
    let cell = |v: &Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    println!("{title}");
    println!(
        "{:>8}{}",
        "trial",
        Arm::ALL
            .iter()
            .map(|a| format!("{:>14}", a.label()))
            .collect::<String>()
    );
    for (t, row) in table.trials.iter().zip(&table.rows) {
        println!(
            "{t:>8}{}",
            row.iter().map(|v| format!("{:>14}", cell(v))).collect::<String>()
        );
    }
    println!(
        "{:>8}{}",
        "avg",
        table
            .average
            .iter()
            .map(|v| format!("{:>14}", cell(v)))
            .collect::<String>()
    );
}

fn write_tables(out: &Path, fairness: &ArmTable<f64>, utilization: &ArmTable<f64>) -> Result<()> {
    store(&out.join(FAIRNESS_FILE), |b| write_arm_table(fairness, b))?;
    store(&out.join(UTILIZATION_FILE), |b| write_arm_table(utilization, b))?;
    print_table("fairness (Jain index)", fairness);
    print_table("mean utilization of hosting edges (%)", utilization);
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let (scenario, seed) = load_scenario(&args.scenario)?;
    let source = load_trace(&args.trace)?;
    create_dir(&args.out)?;

    if !args.repro_paper {
        let arm = Arm::new(args.policy.into(), args.objective.into());
        let set = run_trials(
            &scenario,
            &source,
            arm.policy,
            arm.objective,
            args.trials as usize,
            seed,
        )?;
        write_runs(&args.out, &set)?;
        set.runs.iter().for_each(print_trial);
        return Ok(());
    }

    let mut sets = Vec::new();
    for arm in Arm::ALL {
        let set = run_trials(&scenario, &source, arm.policy, arm.objective, REPRO_TRIALS, seed)?;
        write_runs(&args.out.join(arm.label()), &set)?;
        set.runs.iter().for_each(print_trial);
        sets.push(set);
    }
    let all: Vec<TrialRun<f64>> = sets.iter().flat_map(|s| s.runs.iter().cloned()).collect();
    let refs: Vec<&TrialRun<f64>> = all.iter().collect();
    let averages: Vec<_> = sets.iter().map(|s| &s.average).collect();
    store(&args.out.join(SUMMARY_FILE), |b| write_summary(&refs, &averages, b))?;
    let report = compare_report(&all, &Arm::ALL)?;
    for run in &report.series {
        let points = delay_series(&run.ticks);
        store(&args.out.join(delay_series_file_name(run.arm, run.trial)), |b| {
            write_delay_series(&points, b)
        })?;
    }
    write_tables(&args.out, &report.fairness, &report.utilization)
}

/// Where the ticks file of `(arm, trial)` lives inside a simulate output dir:
/// `<dir>/<arm>/ticks_<k>.csv` for `--repro-paper` outputs, otherwise
/// `<dir>/ticks_<k>.csv` (only unambiguous when the dir holds one arm).
fn ticks_path(dir: &Path, arm: Arm, trial: usize, single_arm: bool) -> Result<PathBuf> {
    let nested = dir.join(arm.label()).join(ticks_file_name(trial));
    if nested.is_file() {
        return Ok(nested);
    }
    let flat = dir.join(ticks_file_name(trial));
    if single_arm && flat.is_file() {
        return Ok(flat);
    }
    Err(Failure::new(
        "missing-ticks",
        format!("no ticks file for {} trial {trial}", arm.label()),
    )
    .with("path", format!("{:?}", dir.display().to_string())))
}

fn parse_required(list: &[String]) -> Result<Vec<Arm>> {
    let mut arms = BTreeSet::new();
    for item in list {
        if item == "all" {
            arms.extend(Arm::ALL);
        } else {
            let arm: Arm = item.parse().map_err(|e: String| Failure::new("invalid-argument", e))?;
            arms.insert(arm);
        }
    }
    Ok(Arm::ALL.into_iter().filter(|a| arms.contains(a)).collect())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let required = parse_required(&args.require)?;
    let mut rows: Vec<SummaryRow<f64>> = Vec::new();
    let mut sources: BTreeMap<(Arm, usize), PathBuf> = BTreeMap::new();
    for dir in &args.input {
        let path = dir.join(SUMMARY_FILE);
        let text = read_text(&path)?;
        let file_rows: Vec<SummaryRow<f64>> = read_summary(text.as_bytes(), &path.display().to_string())?;
        let arms: BTreeSet<Arm> = file_rows.iter().map(|r| r.arm).collect();
        for row in file_rows {
            let ticks = ticks_path(dir, row.arm, row.trial, arms.len() == 1)?;
            if let Some(prev) = sources.insert((row.arm, row.trial), ticks.clone()) {
                return Err(Failure::new(
                    "duplicate-trial",
                    format!(
                        "{} trial {} appears in {} and {}",
                        row.arm.label(),
                        row.trial,
                        prev.display(),
                        ticks.display()
                    ),
                ));
            }
            rows.push(row);
        }
    }
    for arm in &required {
        if !rows.iter().any(|r| r.arm == *arm) {
            return Err(MetricsError::MissingArm(*arm).into());
        }
    }
    if rows.is_empty() {
        return Err(MetricsError::EmptyInput.into());
    }

    create_dir(&args.out)?;
    for ((arm, trial), ticks) in &sources {
        let text = read_text(ticks)?;
        let tick_rows = read_ticks::<f64, _>(text.as_bytes(), &ticks.display().to_string())?;
        let points = delay_series_from_rows(&tick_rows);
        store(&args.out.join(delay_series_file_name(*arm, *trial)), |b| {
            write_delay_series(&points, b)
        })?;
    }
    let (fairness, utilization) = tables_from_rows(&rows);
    write_tables(&args.out, &fairness, &utilization)
}
