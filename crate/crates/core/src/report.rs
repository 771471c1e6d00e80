//! CSV files written by simulation runs and read back by the report step.
//!
//! * `ticks_<trial>.csv`: one row per tick and service.
//! * `summary.csv`: one row per trial, then one `avg` row per arm.
//! * `fairness.csv`, `utilization.csv`: trials × arms tables, `NA` where an
//!   arm is absent.
//! * `delay_<policy>_<objective>_<trial>.csv`: per-service delay series.
//!
//! Numbers are written with Rust's shortest round-trip formatting, missing
//! values as `NA`, lines end with `\n`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::delay::ServiceDelay;
use crate::metrics::{ArmTable, TrialSummary};
use crate::model::{EdgeId, ServiceId};
use crate::optimizer::ObjectiveKind;
use crate::scalar::Real;
use crate::sim::{Arm, PolicyKind, TickRecord, TrialRun};

pub const NA: &str = "NA";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{file}: line {line}: {message}")]
    Malformed { file: String, line: u64, message: String },
    #[error("{file}: header {found:?} does not match the expected {expected:?}")]
    Header {
        file: String,
        expected: String,
        found: String,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn csv_err(file: &str) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Csv {
        file: file.to_string(),
        source,
    }
}

fn opt<T: Real>(v: Option<T>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn bool01(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Field-by-field reader of one CSV record with line-numbered errors.
struct Fields<'a> {
    file: &'a str,
    record: &'a csv::StringRecord,
    line: u64,
}

impl<'a> Fields<'a> {
    fn new(file: &'a str, record: &'a csv::StringRecord) -> Self {
        let line = record.position().map_or(0, |p| p.line());
        Fields { file, record, line }
    }

    fn bad(&self, message: String) -> ReportError {
        ReportError::Malformed {
            file: self.file.to_string(),
            line: self.line,
            message,
        }
    }

    fn raw(&self, i: usize) -> Result<&'a str, ReportError> {
        self.record
            .get(i)
            .ok_or_else(|| self.bad(format!("missing column {}", i + 1)))
    }

    fn parse<V: std::str::FromStr>(&self, i: usize, what: &str) -> Result<V, ReportError> {
        let raw = self.raw(i)?;
        raw.parse().map_err(|_| self.bad(format!("invalid {what} {raw:?}")))
    }

    fn opt<V: std::str::FromStr>(&self, i: usize, what: &str) -> Result<Option<V>, ReportError> {
        if self.raw(i)? == NA {
            Ok(None)
        } else {
            self.parse(i, what).map(Some)
        }
    }

    fn flag(&self, i: usize, what: &str) -> Result<bool, ReportError> {
        match self.raw(i)? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.bad(format!("invalid {what} {other:?}, expected 0 or 1"))),
        }
    }
}

fn check_header(file: &str, found: &csv::StringRecord, expected: &[String]) -> Result<(), ReportError> {
    if found.iter().eq(expected.iter().map(String::as_str)) {
        Ok(())
    } else {
        Err(ReportError::Header {
            file: file.to_string(),
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        })
    }
}

// ---------------------------------------------------------------- ticks

pub const TICKS_HEADER: [&str; 12] = [
    "time",
    "service_id",
    "host_edge",
    "requesters",
    "avg_delay_ms",
    "threshold_ms",
    "reward",
    "q_value",
    "decrements",
    "host_utilization",
    "reoptimized",
    "resolve_failed",
];

/// One row of a ticks file.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRow<T> {
    pub time: T,
    pub service: ServiceId,
    pub host: EdgeId,
    pub requesters: u32,
    pub avg_delay: Option<T>,
    pub threshold: T,
    pub reward: Option<T>,
    pub q_value: Option<T>,
    pub decrements: u8,
    pub host_utilization: T,
    pub reoptimized: bool,
    pub resolve_failed: bool,
}

pub fn ticks_file_name(trial: usize) -> String {
    format!("ticks_{trial}.csv")
}

/// Rows of one tick, in service order.
pub fn tick_rows<T: Real>(tick: &TickRecord<T>) -> impl Iterator<Item = TickRow<T>> + '_ {
    tick.per_service.iter().map(move |s| TickRow {
        time: tick.time,
        service: s.service,
        host: s.host,
        requesters: s.requesters,
        avg_delay: s.avg_delay.mean(),
        threshold: s.threshold,
        reward: s.reward,
        q_value: s.q_value,
        decrements: s.decrements,
        host_utilization: tick
            .per_edge
            .iter()
            .find(|e| e.edge == s.host)
            .map_or_else(T::zero, |e| e.utilization),
        reoptimized: tick.reoptimized,
        resolve_failed: tick.resolve_failed,
    })
}

pub fn write_ticks<T: Real, W: Write>(ticks: &[TickRecord<T>], w: W) -> Result<(), ReportError> {
    let mut out = writer(w);
    let err = csv_err("ticks");
    out.write_record(TICKS_HEADER).map_err(&err)?;
    for row in ticks.iter().flat_map(tick_rows) {
        out.write_record([
            row.time.to_string(),
            row.service.0.to_string(),
            row.host.0.to_string(),
            row.requesters.to_string(),
            opt(row.avg_delay),
            row.threshold.to_string(),
            opt(row.reward),
            opt(row.q_value),
            row.decrements.to_string(),
            row.host_utilization.to_string(),
            bool01(row.reoptimized).to_string(),
            bool01(row.resolve_failed).to_string(),
        ])
        .map_err(&err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ticks<T: Real, R: Read>(r: R, file: &str) -> Result<Vec<TickRow<T>>, ReportError> {
    let mut rd = reader(r);
    let expected: Vec<String> = TICKS_HEADER.iter().map(|s| s.to_string()).collect();
    check_header(file, rd.headers().map_err(csv_err(file))?, &expected)?;
    let mut rows = Vec::new();
    for record in rd.records() {
        let record = record.map_err(csv_err(file))?;
        let f = Fields::new(file, &record);
        rows.push(TickRow {
            time: f.parse(0, "time")?,
            service: ServiceId(f.parse(1, "service id")?),
            host: EdgeId(f.parse(2, "edge id")?),
            requesters: f.parse(3, "requester count")?,
            avg_delay: f.opt(4, "delay")?,
            threshold: f.parse(5, "threshold")?,
            reward: f.opt(6, "reward")?,
            q_value: f.opt(7, "q value")?,
            decrements: f.parse(8, "decrement count")?,
            host_utilization: f.parse(9, "utilization")?,
            reoptimized: f.flag(10, "reoptimized flag")?,
            resolve_failed: f.flag(11, "resolve_failed flag")?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------- delay series

pub const DELAY_SERIES_HEADER: [&str; 4] = ["time", "service_id", "avg_delay_ms", "threshold_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct DelayPoint<T> {
    pub time: T,
    pub service: ServiceId,
    /// `None` when the service had no requesters at that tick.
    pub avg_delay: Option<T>,
    pub threshold: T,
}

pub fn delay_series_file_name(arm: Arm, trial: usize) -> String {
    format!("delay_{}_{}_{trial}.csv", arm.policy.as_str(), arm.objective.as_str())
}

pub fn delay_series<T: Real>(ticks: &[TickRecord<T>]) -> Vec<DelayPoint<T>> {
    ticks
        .iter()
        .flat_map(|t| {
            t.per_service.iter().map(move |s| DelayPoint {
                time: t.time,
                service: s.service,
                avg_delay: match s.avg_delay {
                    ServiceDelay::Mean(d) => Some(d),
                    ServiceDelay::NoDemand => None,
                },
                threshold: s.threshold,
            })
        })
        .collect()
}

/// The delay series contained in a ticks file.
pub fn delay_series_from_rows<T: Real>(rows: &[TickRow<T>]) -> Vec<DelayPoint<T>> {
    rows.iter()
        .map(|r| DelayPoint {
            time: r.time,
            service: r.service,
            avg_delay: r.avg_delay,
            threshold: r.threshold,
        })
        .collect()
}

pub fn write_delay_series<T: Real, W: Write>(points: &[DelayPoint<T>], w: W) -> Result<(), ReportError> {
    let mut out = writer(w);
    let err = csv_err("delay series");
    out.write_record(DELAY_SERIES_HEADER).map_err(&err)?;
    for p in points {
        out.write_record([
            p.time.to_string(),
            p.service.0.to_string(),
            opt(p.avg_delay),
            p.threshold.to_string(),
        ])
        .map_err(&err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_delay_series<T: Real, R: Read>(r: R, file: &str) -> Result<Vec<DelayPoint<T>>, ReportError> {
    let mut rd = reader(r);
    let expected: Vec<String> = DELAY_SERIES_HEADER.iter().map(|s| s.to_string()).collect();
    check_header(file, rd.headers().map_err(csv_err(file))?, &expected)?;
    let mut out = Vec::new();
    for record in rd.records() {
        let record = record.map_err(csv_err(file))?;
        let f = Fields::new(file, &record);
        out.push(DelayPoint {
            time: f.parse(0, "time")?,
            service: ServiceId(f.parse(1, "service id")?),
            avg_delay: f.opt(2, "delay")?,
            threshold: f.parse(3, "threshold")?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------- summary

pub const SUMMARY_FILE: &str = "summary.csv";
/// Value of the `trial` column on the across-trial average row.
pub const AVERAGE_ROW: &str = "avg";

pub fn summary_header(service_count: usize) -> Vec<String> {
    let mut h: Vec<String> = ["trial", "policy", "objective", "jain", "mean_util_pct"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..service_count).map(|s| format!("mean_delay_s{s}")));
    h.push("violations".into());
    h.push("reopts".into());
    h
}

/// One trial row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow<T> {
    pub trial: usize,
    pub arm: Arm,
    pub jain: Option<T>,
    pub mean_util_pct: T,
    pub mean_delay: Vec<Option<T>>,
    pub violations: usize,
    pub reopts: usize,
}

impl<T: Real> SummaryRow<T> {
    pub fn from_summary(trial: usize, s: &TrialSummary<T>) -> Self {
        SummaryRow {
            trial,
            arm: s.arm(),
            jain: s.jain_index,
            mean_util_pct: s.mean_utilization_pct,
            mean_delay: s.per_service_mean_delay.clone(),
            violations: s.violation_ticks,
            reopts: s.reopt_count,
        }
    }
}

fn summary_record<T: Real>(trial: String, s: &TrialSummary<T>) -> Vec<String> {
    let mut rec = vec![
        trial,
        s.policy.as_str().to_string(),
        s.objective.as_str().to_string(),
        opt(s.jain_index),
        s.mean_utilization_pct.to_string(),
    ];
    rec.extend(s.per_service_mean_delay.iter().map(|d| opt(*d)));
    rec.push(s.violation_ticks.to_string());
    rec.push(s.reopt_count.to_string());
    rec
}

/// Trial rows in the given order, then one `avg` row per entry of `averages`.
pub fn write_summary<T: Real, W: Write>(
    runs: &[&TrialRun<T>],
    averages: &[&TrialSummary<T>],
    w: W,
) -> Result<(), ReportError> {
    let service_count = runs
        .first()
        .map(|r| r.summary.per_service_mean_delay.len())
        .or_else(|| averages.first().map(|a| a.per_service_mean_delay.len()))
        .unwrap_or(0);
    let mut out = writer(w);
    let err = csv_err("summary");
    out.write_record(summary_header(service_count)).map_err(&err)?;
    for run in runs {
        out.write_record(summary_record(run.trial.to_string(), &run.summary))
            .map_err(&err)?;
    }
    for avg in averages {
        out.write_record(summary_record(AVERAGE_ROW.to_string(), avg))
            .map_err(&err)?;
    }
    out.flush()?;
    Ok(())
}

/// Trial rows of a summary file; the `avg` row is skipped.
pub fn read_summary<T: Real, R: Read>(r: R, file: &str) -> Result<Vec<SummaryRow<T>>, ReportError> {
    let mut rd = reader(r);
    let header = rd.headers().map_err(csv_err(file))?.clone();
    let service_count = header.len().saturating_sub(7);
    check_header(file, &header, &summary_header(service_count))?;
    let mut rows = Vec::new();
    for record in rd.records() {
        let record = record.map_err(csv_err(file))?;
        let f = Fields::new(file, &record);
        if f.raw(0)? == AVERAGE_ROW {
            continue;
        }
        let policy: PolicyKind = f.parse(1, "policy")?;
        let objective: ObjectiveKind = f.parse(2, "objective")?;
        rows.push(SummaryRow {
            trial: f.parse(0, "trial")?,
            arm: Arm::new(policy, objective),
            jain: f.opt(3, "jain index")?,
            mean_util_pct: f.parse(4, "utilization")?,
            mean_delay: (0..service_count)
                .map(|s| f.opt(5 + s, "delay"))
                .collect::<Result<_, _>>()?,
            violations: f.parse(5 + service_count, "violation count")?,
            reopts: f.parse(6 + service_count, "re-optimization count")?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------- arm tables

pub const FAIRNESS_FILE: &str = "fairness.csv";
pub const UTILIZATION_FILE: &str = "utilization.csv";

pub fn arm_table_header() -> Vec<String> {
    std::iter::once("trial".to_string())
        .chain(Arm::ALL.iter().map(|a| a.label()))
        .collect()
}

/// Trials in rows, `static_delay, rl_delay, static_su, rl_su` in columns, and
/// a final `avg` row.
pub fn write_arm_table<T: Real, W: Write>(table: &ArmTable<T>, w: W) -> Result<(), ReportError> {
    let mut out = writer(w);
    let err = csv_err("table");
    out.write_record(arm_table_header()).map_err(&err)?;
    for (trial, row) in table.trials.iter().zip(&table.rows) {
        let rec: Vec<String> = std::iter::once(trial.to_string())
            .chain(row.iter().map(|v| opt(*v)))
            .collect();
        out.write_record(rec).map_err(&err)?;
    }
    let avg: Vec<String> = std::iter::once(AVERAGE_ROW.to_string())
        .chain(table.average.iter().map(|v| opt(*v)))
        .collect();
    out.write_record(avg).map_err(&err)?;
    out.flush()?;
    Ok(())
}

/// Reads a table back; the `avg` row is recomputed from the trial rows.
pub fn read_arm_table<T: Real, R: Read>(r: R, file: &str) -> Result<ArmTable<T>, ReportError> {
    let mut rd = reader(r);
    check_header(file, rd.headers().map_err(csv_err(file))?, &arm_table_header())?;
    let mut entries = Vec::new();
    for record in rd.records() {
        let record = record.map_err(csv_err(file))?;
        let f = Fields::new(file, &record);
        if f.raw(0)? == AVERAGE_ROW {
            continue;
        }
        let trial: usize = f.parse(0, "trial")?;
        for (k, arm) in Arm::ALL.iter().enumerate() {
            entries.push((trial, *arm, f.opt(1 + k, "value")?));
        }
    }
    Ok(ArmTable::from_entries(entries))
}

/// Fairness (Jain) and utilization tables from summary rows.
pub fn tables_from_rows<T: Real>(rows: &[SummaryRow<T>]) -> (ArmTable<T>, ArmTable<T>) {
    (
        ArmTable::from_entries(rows.iter().map(|r| (r.trial, r.arm, r.jain))),
        ArmTable::from_entries(rows.iter().map(|r| (r.trial, r.arm, Some(r.mean_util_pct)))),
    )
}

// ---------------------------------------------------------------- files

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never sees a partial file.
pub fn write_file_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// Renders with `write` into memory, then stores atomically.
pub fn save<F>(path: &Path, write: F) -> Result<(), ReportError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), ReportError>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    write_file_atomic(path, &buf)?;
    Ok(())
}
