//! Domain failures, reported as one `key=value` line on stderr.

use std::fmt;
use std::path::Path;

use edgeplace::metrics::MetricsError;
use edgeplace::mobility::TraceError;
use edgeplace::model::ScenarioError;
use edgeplace::optimizer::{Infeasibility, SolveError};
use edgeplace::problem_file::ProblemFileError;
use edgeplace::report::ReportError;
use edgeplace::sim::SimError;

/// A failure that ends the process with exit code 1.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    fields: Vec<(&'static str, String)>,
    message: String,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl fmt::Display) -> Self {
        Failure {
            kind,
            fields: Vec::new(),
            message: message.to_string(),
        }
    }

    pub fn with(mut self, key: &'static str, value: impl fmt::Display) -> Self {
        self.fields.push((key, value.to_string()));
        self
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure::new("io", err).with("path", format!("{:?}", path.display().to_string()))
    }

    fn infeasible(inf: &Infeasibility) -> Self {
        let mut f = Failure::new("infeasible", &inf.detail).with("constraint", inf.constraint);
        if let Some(s) = inf.service {
            f = f.with("service", s);
        }
        f
    }
}

/// `error: kind=<kind> [key=value ...] message="<escaped text>"`
impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error: kind={}", self.kind)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        write!(f, " message={:?}", self.message)
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match &e {
            SolveError::Infeasible(inf) => Failure::infeasible(inf),
            SolveError::Problem(_) => Failure::new("invalid-problem", e),
            SolveError::TooLarge { .. } => Failure::new("too-large", e),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InfeasibleAtStart(inf) => Failure::infeasible(&inf),
            SimError::Solve(e) => e.into(),
            SimError::Trace(e) => e.into(),
            SimError::Metrics(e) => e.into(),
            SimError::TraceTooShort { .. } => Failure::new("trace-too-short", e),
            SimError::Problem(_) | SimError::Rl(_) => Failure::new("simulation", e),
        }
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        Failure::new("malformed-trace", e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::new("invalid-config", e)
    }
}

impl From<ProblemFileError> for Failure {
    fn from(e: ProblemFileError) -> Self {
        match &e {
            ProblemFileError::Io { .. } => Failure::new("io", e),
            _ => Failure::new("invalid-problem", e),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::MissingArm(arm) => Failure::new("missing-arm", e).with("arm", arm.label()),
            _ => Failure::new("metrics", e),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match &e {
            ReportError::Io(_) => Failure::new("io", e),
            _ => Failure::new("malformed-report", e),
        }
    }
}
