//! Problem snapshot files consumed by one-shot solving.
//!
//! A snapshot is a TOML document. Services, edges and delay parameters
//! default to the reference scenario; the per-pair delays come either from a
//! list of requests (evaluated with the delay model) or from an explicit
//! `delay_ms` matrix together with a `demand` vector:
//!
//! ```toml
//! objective = "su"          # "delay" or "su"
//! balance_offset = 0.1
//! time = 1.0
//!
//! [[requests]]
//! vehicle = "veh0"
//! x = 350.0
//! y = 120.0
//! service = 2
//! ```
//!
//! ```toml
//! objective = "delay"
//! demand = [3, 1]
//! delay_ms = [[2.0, 4.5], [3.0, 1.5]]   # rows: services, columns: edges
//!
//! [[services]]
//! id = 0
//! resource_demand = 10.0
//! delay_threshold = 4.0
//! # ...
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delay::{DelayModelParams, ServiceDelay};
use crate::model::{
    default_edges, default_services, Area, DemandVector, EdgeNode, Point, RequestSnapshot, ServiceId, ServiceRequest,
    ServiceSpec, SnapshotError, VehicleId, DEFAULT_ISD_M,
};
use crate::optimizer::{ObjectiveKind, PlacementProblem, ProblemError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct RequestEntry<T> {
    pub vehicle: VehicleId,
    pub x: T,
    pub y: T,
    pub service: ServiceId,
}

/// On-disk form of one placement problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct ProblemFile<T> {
    pub objective: ObjectiveKind,
    /// β, the offset keeping zero-demand services in the utilization objective.
    pub balance_offset: T,
    /// Snapshot time, s.
    pub time: T,
    pub delay: DelayModelParams<T>,
    pub services: Vec<ServiceSpec<T>>,
    pub edges: Vec<EdgeNode<T>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub requests: Vec<RequestEntry<T>>,
    /// Requesting UE count per service; only with `delay_ms`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand: Option<Vec<u32>>,
    /// Mean delay per (service, edge), ms; replaces `requests`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<Vec<Vec<T>>>,
}

impl<T: Real> Default for ProblemFile<T> {
    fn default() -> Self {
        ProblemFile {
            objective: ObjectiveKind::Delay,
            balance_offset: T::lit(0.1),
            time: T::one(),
            delay: DelayModelParams::default(),
            services: default_services(),
            edges: default_edges(&Area::default(), T::lit(DEFAULT_ISD_M)),
            requests: Vec::new(),
            demand: None,
            delay_ms: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse problem: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize problem: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("invalid problem: {0}")]
    Snapshot(#[from] SnapshotError),
    #[error("invalid problem: {0}")]
    Problem(#[from] ProblemError),
}

fn invalid(msg: impl Into<String>) -> ProblemFileError {
    ProblemFileError::Invalid(msg.into())
}

impl<T: Real> ProblemFile<T> {
    pub fn from_toml_str(text: &str) -> Result<Self, ProblemFileError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String, ProblemFileError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Snapshot file describing `snapshot` against the given scenario data.
    pub fn from_snapshot(
        services: &[ServiceSpec<T>],
        edges: &[EdgeNode<T>],
        snapshot: &RequestSnapshot<T>,
        delay: &DelayModelParams<T>,
        objective: ObjectiveKind,
        balance_offset: T,
    ) -> Self {
        ProblemFile {
            objective,
            balance_offset,
            time: snapshot.time(),
            delay: *delay,
            services: services.to_vec(),
            edges: edges.to_vec(),
            requests: snapshot
                .iter()
                .map(|r| RequestEntry {
                    vehicle: r.vehicle_id.clone(),
                    x: r.location.x,
                    y: r.location.y,
                    service: r.service_id,
                })
                .collect(),
            demand: None,
            delay_ms: None,
        }
    }

    fn check_values(&self) -> Result<(), ProblemFileError> {
        if self.services.is_empty() {
            return Err(invalid("no services"));
        }
        if self.edges.is_empty() {
            return Err(invalid("no edges"));
        }
        for s in &self.services {
            if !(s.resource_demand > T::zero()) || !(s.delay_threshold > T::zero()) {
                return Err(invalid(format!(
                    "service {} needs positive resource_demand and delay_threshold",
                    s.id
                )));
            }
        }
        for e in &self.edges {
            if !(e.capacity > T::zero()) || !e.position.is_finite() {
                return Err(invalid(format!(
                    "edge {} needs positive capacity and a finite position",
                    e.id
                )));
            }
        }
        let d = &self.delay;
        if [d.base_delay, d.access_coeff, d.backhaul_coeff]
            .iter()
            .any(|v| !(*v >= T::zero()) || !v.is_finite())
        {
            return Err(invalid("delay parameters must be finite and non-negative"));
        }
        if !(self.balance_offset >= T::zero()) || !self.balance_offset.is_finite() {
            return Err(invalid("balance_offset must be finite and non-negative"));
        }
        Ok(())
    }

    /// Builds the optimization instance.
    pub fn to_problem(&self) -> Result<PlacementProblem<T>, ProblemFileError> {
        self.check_values()?;
        match (&self.delay_ms, &self.demand) {
            (Some(matrix), Some(demand)) => {
                if !self.requests.is_empty() {
                    return Err(invalid("give either requests or delay_ms, not both"));
                }
                if demand.len() != self.services.len() {
                    return Err(invalid(format!(
                        "demand has {} entries for {} services",
                        demand.len(),
                        self.services.len()
                    )));
                }
                if matrix.iter().flatten().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
                    return Err(invalid("delay_ms entries must be finite and non-negative"));
                }
                let delays = matrix
                    .iter()
                    .zip(demand)
                    .map(|(row, &u)| {
                        row.iter()
                            .map(|&v| {
                                if u == 0 {
                                    ServiceDelay::NoDemand
                                } else {
                                    ServiceDelay::Mean(v)
                                }
                            })
                            .collect()
                    })
                    .collect();
                Ok(PlacementProblem::from_parts(
                    self.services.clone(),
                    self.edges.clone(),
                    DemandVector(demand.clone()),
                    delays,
                    self.objective,
                    self.balance_offset,
                )?)
            }
            (None, None) => {
                let requests = self
                    .requests
                    .iter()
                    .map(|r| {
                        let location = Point::new(r.x, r.y);
                        if !location.is_finite() {
                            return Err(invalid(format!("request of {} has a non-finite position", r.vehicle)));
                        }
                        Ok(ServiceRequest {
                            vehicle_id: r.vehicle.clone(),
                            location,
                            time: self.time,
                            service_id: r.service,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let snapshot = RequestSnapshot::new(self.time, self.services.len(), requests)?;
                Ok(PlacementProblem::from_snapshot(
                    &self.services,
                    &self.edges,
                    &snapshot,
                    &self.delay,
                    self.objective,
                    self.balance_offset,
                )?)
            }
            _ => Err(invalid("delay_ms and demand must be given together")),
        }
    }
}
