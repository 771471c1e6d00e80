//! Exact placement of services onto edges.
//!
//! A placement is feasible when every service has exactly one host, no edge
//! hosts two services, each service's mean delay is strictly below its
//! threshold, its resource demand fits the host capacity, and its requester
//! count fits the host's UE limit. Two objectives are supported: total mean
//! delay, and demand-weighted utilization `sum (R_s / C_i) * (U_s + beta)`.
//!
//! [`solve`] is a branch and bound over services in id order, bounded by an
//! exact assignment relaxation of the unplaced remainder. [`brute_force_solve`]
//! enumerates every injective assignment and serves as the reference.

mod brute;
mod hungarian;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute::{brute_force_solve, BRUTE_FORCE_MAX_SERVICES};
pub use hungarian::{min_cost as assignment_min_cost, solve as assignment_solve};
pub use search::solve;

use crate::delay::{average_service_delay, DelayModelParams, ServiceDelay};
use crate::model::{DemandVector, EdgeId, EdgeNode, Placement, RequestSnapshot, ServiceId, ServiceSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Sum of per-service mean delays.
    #[serde(alias = "d", alias = "d-opt")]
    Delay,
    /// Demand-weighted server utilization.
    #[serde(alias = "su", alias = "su-opt")]
    Utilization,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 2] = [ObjectiveKind::Delay, ObjectiveKind::Utilization];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Delay => "delay",
            ObjectiveKind::Utilization => "su",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "delay" | "d" | "d-opt" => Ok(ObjectiveKind::Delay),
            "su" | "utilization" | "su-opt" => Ok(ObjectiveKind::Utilization),
            other => Err(format!("unknown objective '{other}' (expected delay|su)")),
        }
    }
}

/// Placement constraints, in the order they are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Every service is deployed on exactly one edge.
    SingleHost,
    /// No edge hosts more than one service.
    DistinctHosts,
    /// Mean delay strictly below the service threshold.
    DelayBound,
    /// Service resource demand fits the host capacity.
    ResourceCapacity,
    /// Requesting UEs fit the host UE limit.
    UeLimit,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::SingleHost,
        Constraint::DistinctHosts,
        Constraint::DelayBound,
        Constraint::ResourceCapacity,
        Constraint::UeLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::SingleHost => "single-host",
            Constraint::DistinctHosts => "distinct-hosts",
            Constraint::DelayBound => "delay-bound",
            Constraint::ResourceCapacity => "resource-capacity",
            Constraint::UeLimit => "ue-limit",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown service {0}")]
    UnknownService(ServiceId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
}

/// One optimization instance: static scenario data plus the per-pair delay
/// table and demand vector derived from a request snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementProblem<T> {
    services: Vec<ServiceSpec<T>>,
    edges: Vec<EdgeNode<T>>,
    demand: DemandVector,
    /// `delay_matrix[s][i]`: mean delay of service `s` if hosted on edge `i`.
    delay_matrix: Vec<Vec<ServiceDelay<T>>>,
    objective: ObjectiveKind,
    balance_offset: T,
}

impl<T: Real> PlacementProblem<T> {
    /// Derives demand and the delay table from `snapshot`.
    pub fn from_snapshot(
        services: &[ServiceSpec<T>],
        edges: &[EdgeNode<T>],
        snapshot: &RequestSnapshot<T>,
        delay: &DelayModelParams<T>,
        objective: ObjectiveKind,
        balance_offset: T,
    ) -> Result<Self, ProblemError> {
        if snapshot.service_count() != services.len() {
            return Err(ProblemError::DimensionMismatch(format!(
                "snapshot groups {} services, scenario has {}",
                snapshot.service_count(),
                services.len()
            )));
        }
        let delay_matrix = services
            .iter()
            .map(|s| {
                edges
                    .iter()
                    .map(|host| average_service_delay(snapshot, s.id, host, edges, delay))
                    .collect()
            })
            .collect();
        PlacementProblem::from_parts(
            services.to_vec(),
            edges.to_vec(),
            snapshot.demand(),
            delay_matrix,
            objective,
            balance_offset,
        )
    }

    /// Builds a problem from an explicit delay table and demand vector.
    pub fn from_parts(
        services: Vec<ServiceSpec<T>>,
        edges: Vec<EdgeNode<T>>,
        demand: DemandVector,
        delay_matrix: Vec<Vec<ServiceDelay<T>>>,
        objective: ObjectiveKind,
        balance_offset: T,
    ) -> Result<Self, ProblemError> {
        let (ns, ne) = (services.len(), edges.len());
        if demand.len() != ns {
            return Err(ProblemError::DimensionMismatch(format!(
                "demand has {} entries for {ns} services",
                demand.len()
            )));
        }
        if delay_matrix.len() != ns || delay_matrix.iter().any(|row| row.len() != ne) {
            return Err(ProblemError::DimensionMismatch(format!(
                "delay matrix must be {ns}x{ne}"
            )));
        }
        for (k, s) in services.iter().enumerate() {
            if s.id.0 != k {
                return Err(ProblemError::DimensionMismatch(format!(
                    "service at position {k} has id {}",
                    s.id
                )));
            }
        }
        for (k, e) in edges.iter().enumerate() {
            if e.id.0 != k {
                return Err(ProblemError::DimensionMismatch(format!(
                    "edge at position {k} has id {}",
                    e.id
                )));
            }
        }
        Ok(PlacementProblem {
            services,
            edges,
            demand,
            delay_matrix,
            objective,
            balance_offset,
        })
    }

    pub fn services(&self) -> &[ServiceSpec<T>] {
        &self.services
    }

    pub fn edges(&self) -> &[EdgeNode<T>] {
        &self.edges
    }

    pub fn demand(&self) -> &DemandVector {
        &self.demand
    }

    pub fn objective(&self) -> ObjectiveKind {
        self.objective
    }

    pub fn balance_offset(&self) -> T {
        self.balance_offset
    }

    pub fn service_count(&self) -> usize {
        self.services.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn with_objective(mut self, objective: ObjectiveKind) -> Self {
        self.objective = objective;
        self
    }

    pub fn delay(&self, service: ServiceId, edge: EdgeId) -> ServiceDelay<T> {
        self.delay_matrix[service.0][edge.0]
    }

    pub fn delay_matrix(&self) -> &[Vec<ServiceDelay<T>>] {
        &self.delay_matrix
    }

    /// `R_s / C_i`.
    pub fn utilization(&self, service: ServiceId, edge: EdgeId) -> T {
        self.services[service.0].resource_demand / self.edges[edge.0].capacity
    }

    /// Objective contribution of hosting `service` on `edge`.
    pub fn term(&self, service: ServiceId, edge: EdgeId) -> T {
        match self.objective {
            ObjectiveKind::Delay => self.delay(service, edge).cost(),
            ObjectiveKind::Utilization => {
                let demand = T::from_u32(self.demand.count(service)).unwrap_or_else(T::zero);
                self.utilization(service, edge) * (demand + self.balance_offset)
            }
        }
    }

    /// Whether the per-pair constraints (delay, capacity, UE limit) hold.
    pub fn pair_allowed(&self, service: ServiceId, edge: EdgeId) -> bool {
        self.pair_violation(service, edge).is_none()
    }

    /// First per-pair constraint broken by hosting `service` on `edge`.
    pub fn pair_violation(&self, service: ServiceId, edge: EdgeId) -> Option<Constraint> {
        let s = &self.services[service.0];
        let e = &self.edges[edge.0];
        if !self.delay(service, edge).within(s.delay_threshold) {
            return Some(Constraint::DelayBound);
        }
        if s.resource_demand > e.capacity {
            return Some(Constraint::ResourceCapacity);
        }
        if self.demand.count(service) > e.ue_limit {
            return Some(Constraint::UeLimit);
        }
        None
    }

    fn check_ids(&self, placement: &Placement) -> Result<(), ProblemError> {
        if placement.len() > self.services.len() {
            return Err(ProblemError::UnknownService(ServiceId(self.services.len())));
        }
        if placement.len() < self.services.len() {
            return Err(ProblemError::DimensionMismatch(format!(
                "placement covers {} of {} services",
                placement.len(),
                self.services.len()
            )));
        }
        match placement.hosts().iter().find(|e| e.0 >= self.edges.len()) {
            Some(&e) => Err(ProblemError::UnknownEdge(e)),
            None => Ok(()),
        }
    }

    /// Objective value of a complete placement.
    pub fn objective_value(&self, placement: &Placement) -> Result<T, ProblemError> {
        self.check_ids(placement)?;
        Ok(placement
            .iter()
            .map(|(s, e)| self.term(s, e))
            .fold(T::zero(), |acc, t| acc + t))
    }

    /// Per-constraint pass/fail of `placement`, never failing.
    pub fn check_feasibility(&self, placement: &Placement) -> FeasibilityReport {
        let mut report = FeasibilityReport::default();
        for s in 0..self.services.len() {
            let sid = ServiceId(s);
            match placement.host(sid) {
                Some(e) if e.0 < self.edges.len() => {}
                other => report.push(Constraint::SingleHost, sid, other),
            }
        }
        for s in self.services.len()..placement.len() {
            report.push(Constraint::SingleHost, ServiceId(s), placement.host(ServiceId(s)));
        }
        // `Placement` is injective by construction; re-checked for completeness.
        let mut owner = vec![None; self.edges.len()];
        for (s, e) in placement.iter() {
            if let Some(slot) = owner.get_mut(e.0) {
                if slot.is_some() {
                    report.push(Constraint::DistinctHosts, s, Some(e));
                }
                *slot = Some(s);
            }
        }
        for (s, e) in placement.iter() {
            if s.0 >= self.services.len() || e.0 >= self.edges.len() {
                continue;
            }
            let spec = &self.services[s.0];
            let edge = &self.edges[e.0];
            if !self.delay(s, e).within(spec.delay_threshold) {
                report.push(Constraint::DelayBound, s, Some(e));
            }
            if spec.resource_demand > edge.capacity {
                report.push(Constraint::ResourceCapacity, s, Some(e));
            }
            if self.demand.count(s) > edge.ue_limit {
                report.push(Constraint::UeLimit, s, Some(e));
            }
        }
        report
    }

    /// Names the first constraint that makes the instance infeasible.
    pub(crate) fn diagnose(&self) -> Infeasibility {
        let (ns, ne) = (self.services.len(), self.edges.len());
        if ns > ne {
            return Infeasibility {
                constraint: Constraint::DistinctHosts,
                service: None,
                detail: format!("{ns} services cannot be hosted on {ne} distinct edges"),
            };
        }
        for s in 0..ns {
            let sid = ServiceId(s);
            let spec = &self.services[s];
            let edges = || (0..ne).map(EdgeId);
            if !edges().any(|e| spec.resource_demand <= self.edges[e.0].capacity) {
                return Infeasibility {
                    constraint: Constraint::ResourceCapacity,
                    service: Some(sid),
                    detail: format!(
                        "service {s} needs {} resource units, no edge has that capacity",
                        spec.resource_demand
                    ),
                };
            }
            if !edges().any(|e| {
                spec.resource_demand <= self.edges[e.0].capacity && self.demand.count(sid) <= self.edges[e.0].ue_limit
            }) {
                return Infeasibility {
                    constraint: Constraint::UeLimit,
                    service: Some(sid),
                    detail: format!(
                        "service {s} has {} requesters, above every large-enough edge's UE limit",
                        self.demand.count(sid)
                    ),
                };
            }
            if !edges().any(|e| self.pair_allowed(sid, e)) {
                return Infeasibility {
                    constraint: Constraint::DelayBound,
                    service: Some(sid),
                    detail: format!(
                        "service {s} exceeds its {} ms delay threshold on every admissible edge",
                        spec.delay_threshold
                    ),
                };
            }
        }
        Infeasibility {
            constraint: Constraint::DistinctHosts,
            service: None,
            detail: "admissible hosts overlap; no assignment gives every service its own edge".into(),
        }
    }
}

/// Free-function form of [`PlacementProblem::objective_value`].
pub fn objective_value<T: Real>(problem: &PlacementProblem<T>, placement: &Placement) -> Result<T, ProblemError> {
    problem.objective_value(placement)
}

/// Free-function form of [`PlacementProblem::check_feasibility`].
pub fn check_feasibility<T: Real>(problem: &PlacementProblem<T>, placement: &Placement) -> FeasibilityReport {
    problem.check_feasibility(placement)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Offense {
    pub constraint: Constraint,
    pub service: ServiceId,
    pub edge: Option<EdgeId>,
}

/// Violations found by [`PlacementProblem::check_feasibility`]; empty means feasible.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub offenses: Vec<Offense>,
}

impl FeasibilityReport {
    fn push(&mut self, constraint: Constraint, service: ServiceId, edge: Option<EdgeId>) {
        self.offenses.push(Offense {
            constraint,
            service,
            edge,
        });
    }

    pub fn is_feasible(&self) -> bool {
        self.offenses.is_empty()
    }

    pub fn passes(&self, constraint: Constraint) -> bool {
        !self.offenses.iter().any(|o| o.constraint == constraint)
    }

    pub fn failures(&self, constraint: Constraint) -> impl Iterator<Item = &Offense> {
        self.offenses.iter().filter(move |o| o.constraint == constraint)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in Constraint::ALL {
            let bad: Vec<String> = self
                .failures(c)
                .map(|o| match o.edge {
                    Some(e) => format!("s{}@e{}", o.service, e),
                    None => format!("s{}", o.service),
                })
                .collect();
            if bad.is_empty() {
                writeln!(f, "{:<18} pass", c.name())?;
            } else {
                writeln!(f, "{:<18} FAIL {}", c.name(), bad.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Why an instance has no feasible placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Infeasibility {
    pub constraint: Constraint,
    pub service: Option<ServiceId>,
    pub detail: String,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "infeasible: constraint={} ", self.constraint)?;
        if let Some(s) = self.service {
            write!(f, "service={s} ")?;
        }
        f.write_str(&self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("{0}")]
    Infeasible(Infeasibility),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("brute force limited to {max} services, got {services}")]
    TooLarge { services: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementSolution<T> {
    pub placement: Placement,
    pub objective_value: T,
    pub feasible: bool,
    pub report: FeasibilityReport,
    /// Mean delay of each service on its chosen host.
    pub service_delays: Vec<ServiceDelay<T>>,
    /// Complete assignments evaluated (leaves of the search).
    pub evaluated: u64,
}

impl<T: Real> PlacementSolution<T> {
    pub(crate) fn build(
        problem: &PlacementProblem<T>,
        placement: Placement,
        evaluated: u64,
    ) -> Result<Self, ProblemError> {
        let objective_value = problem.objective_value(&placement)?;
        let report = problem.check_feasibility(&placement);
        let service_delays = placement.iter().map(|(s, e)| problem.delay(s, e)).collect();
        Ok(PlacementSolution {
            feasible: report.is_feasible(),
            placement,
            objective_value,
            report,
            service_delays,
            evaluated,
        })
    }
}
