//! Domain types: services, edge servers, requests, placements and the
//! scenario configuration that ties them together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delay::DelayModelParams;
use crate::mobility::{place_enbs, SyntheticParams};
use crate::scalar::Real;

/// Dense service index `0..|S|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub usize);

/// Dense edge server index `0..|E|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub String);

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VehicleId {
    fn from(s: &str) -> Self {
        VehicleId(s.to_owned())
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned box `[0, width] x [0, height]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Area<T> {
    pub width: T,
    pub height: T,
}

impl<T: Real> Area<T> {
    pub fn new(width: T, height: T) -> Self {
        Area { width, height }
    }

    /// Square box of the given surface in km².
    pub fn square_km2(km2: T) -> Self {
        let side = (km2 * T::lit(1e6)).sqrt();
        Area::new(side, side)
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= T::zero() && p.y >= T::zero() && p.x <= self.width && p.y <= self.height
    }

    pub fn clamp(&self, p: Point<T>) -> Point<T> {
        Point::new(p.x.max(T::zero()).min(self.width), p.y.max(T::zero()).min(self.height))
    }
}

impl<T: Real> Default for Area<T> {
    fn default() -> Self {
        Area::square_km2(T::lit(3.0))
    }
}

/// A service type with its resource demand `R_s` and delay threshold `D_s` (ms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ServiceSpec<T> {
    pub id: ServiceId,
    pub resource_demand: T,
    pub delay_threshold: T,
}

/// An edge server co-located with an eNB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EdgeNode<T> {
    pub id: EdgeId,
    pub position: Point<T>,
    pub capacity: T,
    pub ue_limit: u32,
}

/// The `(vehicle, location, time, service)` request tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ServiceRequest<T> {
    pub vehicle_id: VehicleId,
    pub location: Point<T>,
    pub time: T,
    pub service_id: ServiceId,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("request from vehicle {vehicle} has time {found}, snapshot time is {expected}")]
    TimeMismatch {
        vehicle: VehicleId,
        expected: f64,
        found: f64,
    },
    #[error("vehicle {vehicle} requests service {service} more than once")]
    DuplicateRequest { vehicle: VehicleId, service: ServiceId },
    #[error("request references unknown service {0}")]
    UnknownService(ServiceId),
}

/// All requests active at one instant, grouped by service.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestSnapshot<T> {
    time: T,
    by_service: Vec<Vec<ServiceRequest<T>>>,
}

impl<T: Real> RequestSnapshot<T> {
    pub fn new(
        time: T,
        service_count: usize,
        requests: impl IntoIterator<Item = ServiceRequest<T>>,
    ) -> Result<Self, SnapshotError> {
        let mut by_service: Vec<Vec<ServiceRequest<T>>> = vec![Vec::new(); service_count];
        let mut seen = BTreeSet::new();
        for req in requests {
            if req.time != time {
                return Err(SnapshotError::TimeMismatch {
                    vehicle: req.vehicle_id,
                    expected: time.as_f64(),
                    found: req.time.as_f64(),
                });
            }
            let slot = by_service
                .get_mut(req.service_id.0)
                .ok_or(SnapshotError::UnknownService(req.service_id))?;
            if !seen.insert((req.service_id, req.vehicle_id.clone())) {
                return Err(SnapshotError::DuplicateRequest {
                    vehicle: req.vehicle_id,
                    service: req.service_id,
                });
            }
            slot.push(req);
        }
        Ok(RequestSnapshot { time, by_service })
    }

    pub fn empty(time: T, service_count: usize) -> Self {
        RequestSnapshot {
            time,
            by_service: vec![Vec::new(); service_count],
        }
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn service_count(&self) -> usize {
        self.by_service.len()
    }

    /// Requests for `service`; empty for unknown ids.
    pub fn requests(&self, service: ServiceId) -> &[ServiceRequest<T>] {
        self.by_service.get(service.0).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &ServiceRequest<T>> {
        self.by_service.iter().flatten()
    }

    pub fn total_requests(&self) -> usize {
        self.by_service.iter().map(Vec::len).sum()
    }

    pub fn demand(&self) -> DemandVector {
        DemandVector(self.by_service.iter().map(|r| r.len() as u32).collect())
    }
}

/// Requesting UE count `U_s` per service.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandVector(pub Vec<u32>);

impl DemandVector {
    pub fn count(&self, service: ServiceId) -> u32 {
        self.0.get(service.0).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlacementError {
    #[error("edge {edge} hosts both service {first} and service {second}")]
    NotInjective {
        edge: EdgeId,
        first: ServiceId,
        second: ServiceId,
    },
    #[error("service {0} has no host")]
    MissingService(ServiceId),
}

/// Injective assignment of every service to one edge, indexed by service id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<EdgeId>", into = "Vec<EdgeId>")]
pub struct Placement {
    hosts: Vec<EdgeId>,
}

impl Placement {
    pub fn new(hosts: Vec<EdgeId>) -> Result<Self, PlacementError> {
        let mut owner: BTreeMap<EdgeId, ServiceId> = BTreeMap::new();
        for (s, &edge) in hosts.iter().enumerate() {
            if let Some(&first) = owner.get(&edge) {
                return Err(PlacementError::NotInjective {
                    edge,
                    first,
                    second: ServiceId(s),
                });
            }
            owner.insert(edge, ServiceId(s));
        }
        Ok(Placement { hosts })
    }

    /// Builds a placement from a sparse map; keys must cover `0..n` densely.
    pub fn from_map(map: &BTreeMap<ServiceId, EdgeId>) -> Result<Self, PlacementError> {
        let hosts = (0..map.len())
            .map(|s| {
                map.get(&ServiceId(s))
                    .copied()
                    .ok_or(PlacementError::MissingService(ServiceId(s)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Placement::new(hosts)
    }

    pub fn host(&self, service: ServiceId) -> Option<EdgeId> {
        self.hosts.get(service.0).copied()
    }

    pub fn hosts(&self) -> &[EdgeId] {
        &self.hosts
    }

    pub fn len(&self) -> usize {
        self.hosts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hosts.is_empty()
    }

    /// Service hosted on `edge`, if any.
    pub fn guest(&self, edge: EdgeId) -> Option<ServiceId> {
        self.hosts.iter().position(|&e| e == edge).map(ServiceId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ServiceId, EdgeId)> + '_ {
        self.hosts.iter().enumerate().map(|(s, &e)| (ServiceId(s), e))
    }
}

impl TryFrom<Vec<EdgeId>> for Placement {
    type Error = PlacementError;

    fn try_from(hosts: Vec<EdgeId>) -> Result<Self, Self::Error> {
        Placement::new(hosts)
    }
}

impl From<Placement> for Vec<EdgeId> {
    fn from(p: Placement) -> Self {
        p.hosts
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.hosts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

pub const DEFAULT_RESOURCE_DEMANDS: [f64; 6] = [60.0, 20.0, 60.0, 40.0, 50.0, 70.0];
pub const DEFAULT_CAPACITIES: [f64; 6] = [60.0, 60.0, 70.0, 80.0, 90.0, 100.0];
pub const DEFAULT_DELAY_THRESHOLDS_MS: [f64; 6] = [5.0, 4.0, 4.5, 5.0, 5.0, 5.5];
pub const DEFAULT_UE_LIMIT: u32 = 100;
pub const DEFAULT_ISD_M: f64 = 500.0;

pub fn default_services<T: Real>() -> Vec<ServiceSpec<T>> {
    DEFAULT_RESOURCE_DEMANDS
        .iter()
        .zip(DEFAULT_DELAY_THRESHOLDS_MS)
        .enumerate()
        .map(|(s, (&r, d))| ServiceSpec {
            id: ServiceId(s),
            resource_demand: T::lit(r),
            delay_threshold: T::lit(d),
        })
        .collect()
}

/// Default edges: the first sites of the eNB grid in row-major order.
pub fn default_edges<T: Real>(area: &Area<T>, isd: T) -> Vec<EdgeNode<T>> {
    place_enbs(area, isd)
        .into_iter()
        .zip(DEFAULT_CAPACITIES)
        .enumerate()
        .map(|(i, (position, c))| EdgeNode {
            id: EdgeId(i),
            position,
            capacity: T::lit(c),
            ue_limit: DEFAULT_UE_LIMIT,
        })
        .collect()
}

/// Full experiment configuration. Every field has a default, so an empty
/// TOML document yields the reference setup (6 services, 6 edges, 100
/// vehicles, 500 s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct ScenarioConfig<T> {
    pub services: Vec<ServiceSpec<T>>,
    pub edges: Vec<EdgeNode<T>>,
    pub vehicle_count: usize,
    /// Q-learning rate, in (0, 1].
    pub learning_rate: T,
    /// Discount factor, in [0, 1).
    pub discount: T,
    /// Offset added to every demand count in the utilization objective.
    pub balance_offset: T,
    /// Reward substituted for a delay-threshold violation.
    pub violation_penalty: T,
    /// Simulated duration in seconds; ticks run at `monitor_interval, 2*monitor_interval, ..`.
    pub horizon: T,
    pub monitor_interval: T,
    /// Inter-site distance used to lay out the default edges.
    pub isd: T,
    /// Probability per tick that a vehicle switches to a fresh random service.
    pub churn_rate: T,
    pub delay: DelayModelParams<T>,
    pub mobility: SyntheticParams<T>,
    pub rng_seed: u64,
}

impl<T: Real> Default for ScenarioConfig<T> {
    fn default() -> Self {
        let mobility = SyntheticParams::default();
        let isd = T::lit(DEFAULT_ISD_M);
        ScenarioConfig {
            services: default_services(),
            edges: default_edges(&mobility.area, isd),
            vehicle_count: 100,
            learning_rate: T::lit(0.75),
            discount: T::zero(),
            balance_offset: T::lit(0.1),
            violation_penalty: T::lit(-10.0),
            horizon: T::lit(500.0),
            monitor_interval: T::one(),
            isd,
            churn_rate: T::lit(0.02),
            delay: DelayModelParams::default(),
            mobility,
            rng_seed: 0,
        }
    }
}

/// A single broken rule found while validating a [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigViolation {
    #[error("services: list is empty")]
    EmptyServices,
    #[error("edges: list is empty")]
    EmptyEdges,
    #[error("{field}: must be > 0, got {value}")]
    NonPositiveParameter { field: String, value: f64 },
    #[error("{field}: must be >= 0, got {value}")]
    NegativeParameter { field: String, value: f64 },
    #[error("{kind}: id {id} appears more than once")]
    DuplicateId { kind: &'static str, id: usize },
    #[error("{kind}: ids must be dense 0..{count}, found {id}")]
    NonDenseId {
        kind: &'static str,
        id: usize,
        count: usize,
    },
    #[error("learning_rate: must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("discount: must lie in [0, 1), got {0}")]
    DiscountOutOfRange(f64),
    #[error("{field}: probability must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange { field: String, value: f64 },
    #[error("edges[{edge}].position: ({x}, {y}) lies outside the scenario area")]
    EdgeOutsideArea { edge: usize, x: f64, y: f64 },
    #[error("mobility: speed range [{min}, {max}] is empty")]
    EmptySpeedRange { min: f64, max: f64 },
}

/// Every violation found in a scenario, in field order.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationReport(pub Vec<ConfigViolation>);

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario: ")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl ValidationReport {
    pub fn violations(&self) -> &[ConfigViolation] {
        &self.0
    }

    pub fn contains(&self, pred: impl Fn(&ConfigViolation) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Invalid(#[from] ValidationReport),
}

/// A scenario whose invariants have been checked. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidScenario<T>(ScenarioConfig<T>);

impl<T> Deref for ValidScenario<T> {
    type Target = ScenarioConfig<T>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl<T> ValidScenario<T> {
    pub fn into_inner(self) -> ScenarioConfig<T> {
        self.0
    }
}

impl<T: Real> ValidScenario<T> {
    /// Returns a copy with a different seed; the seed has no invariants.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.0.clone();
        cfg.rng_seed = seed;
        ValidScenario(cfg)
    }

    pub fn service_count(&self) -> usize {
        self.0.services.len()
    }

    pub fn edge_count(&self) -> usize {
        self.0.edges.len()
    }

    /// Number of monitoring ticks in the horizon.
    pub fn tick_count(&self) -> usize {
        (self.0.horizon / self.0.monitor_interval)
            .floor()
            .to_usize()
            .unwrap_or(0)
    }

    /// Time of the 1-based tick `k`.
    pub fn tick_time(&self, k: usize) -> T {
        T::from_usize(k).unwrap_or_else(T::zero) * self.0.monitor_interval
    }
}

fn check_positive<T: Real>(out: &mut Vec<ConfigViolation>, field: impl Into<String>, v: T) {
    if !(v > T::zero()) {
        out.push(ConfigViolation::NonPositiveParameter {
            field: field.into(),
            value: v.as_f64(),
        });
    }
}

fn check_non_negative<T: Real>(out: &mut Vec<ConfigViolation>, field: impl Into<String>, v: T) {
    if !(v >= T::zero()) {
        out.push(ConfigViolation::NegativeParameter {
            field: field.into(),
            value: v.as_f64(),
        });
    }
}

fn check_ids(out: &mut Vec<ConfigViolation>, kind: &'static str, ids: impl Iterator<Item = usize>, count: usize) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(ConfigViolation::DuplicateId { kind, id });
        } else if id >= count {
            out.push(ConfigViolation::NonDenseId { kind, id, count });
        }
    }
}

/// Checks every invariant of the scenario, collecting all violations.
pub fn validate_scenario<T: Real>(config: ScenarioConfig<T>) -> Result<ValidScenario<T>, ValidationReport> {
    let mut v = Vec::new();

    if config.services.is_empty() {
        v.push(ConfigViolation::EmptyServices);
    }
    if config.edges.is_empty() {
        v.push(ConfigViolation::EmptyEdges);
    }
    check_ids(
        &mut v,
        "services",
        config.services.iter().map(|s| s.id.0),
        config.services.len(),
    );
    for (k, s) in config.services.iter().enumerate() {
        check_positive(&mut v, format!("services[{k}].resource_demand"), s.resource_demand);
        check_positive(&mut v, format!("services[{k}].delay_threshold"), s.delay_threshold);
    }
    check_ids(&mut v, "edges", config.edges.iter().map(|e| e.id.0), config.edges.len());
    let area = config.mobility.area;
    for (k, e) in config.edges.iter().enumerate() {
        check_positive(&mut v, format!("edges[{k}].capacity"), e.capacity);
        if e.ue_limit == 0 {
            v.push(ConfigViolation::NonPositiveParameter {
                field: format!("edges[{k}].ue_limit"),
                value: 0.0,
            });
        }
        if !e.position.is_finite() || !area.contains(&e.position) {
            v.push(ConfigViolation::EdgeOutsideArea {
                edge: k,
                x: e.position.x.as_f64(),
                y: e.position.y.as_f64(),
            });
        }
    }

    let alpha = config.learning_rate;
    if !(alpha > T::zero() && alpha <= T::one()) {
        v.push(ConfigViolation::AlphaOutOfRange(alpha.as_f64()));
    }
    let gamma = config.discount;
    if !(gamma >= T::zero() && gamma < T::one()) {
        v.push(ConfigViolation::DiscountOutOfRange(gamma.as_f64()));
    }
    check_positive(&mut v, "balance_offset", config.balance_offset);
    check_positive(&mut v, "horizon", config.horizon);
    check_positive(&mut v, "monitor_interval", config.monitor_interval);
    check_positive(&mut v, "isd", config.isd);
    if !(config.churn_rate >= T::zero() && config.churn_rate <= T::one()) {
        v.push(ConfigViolation::ProbabilityOutOfRange {
            field: "churn_rate".into(),
            value: config.churn_rate.as_f64(),
        });
    }
    if !config.violation_penalty.is_finite() {
        v.push(ConfigViolation::NonPositiveParameter {
            field: "violation_penalty (must be finite)".into(),
            value: config.violation_penalty.as_f64(),
        });
    }

    check_non_negative(&mut v, "delay.base_delay", config.delay.base_delay);
    check_non_negative(&mut v, "delay.access_coeff", config.delay.access_coeff);
    check_non_negative(&mut v, "delay.backhaul_coeff", config.delay.backhaul_coeff);

    let m = &config.mobility;
    check_positive(&mut v, "mobility.area.width", m.area.width);
    check_positive(&mut v, "mobility.area.height", m.area.height);
    check_positive(&mut v, "mobility.tick", m.tick);
    check_positive(&mut v, "mobility.speed_min", m.speed_min);
    if !(m.speed_min <= m.speed_max) {
        v.push(ConfigViolation::EmptySpeedRange {
            min: m.speed_min.as_f64(),
            max: m.speed_max.as_f64(),
        });
    }
    if !(m.stagger >= T::zero() && m.stagger <= T::lit(0.5)) {
        v.push(ConfigViolation::ProbabilityOutOfRange {
            field: "mobility.stagger (max 0.5)".into(),
            value: m.stagger.as_f64(),
        });
    }

    if v.is_empty() {
        Ok(ValidScenario(config))
    } else {
        Err(ValidationReport(v))
    }
}

impl<T: Real> ScenarioConfig<T> {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(self) -> Result<ValidScenario<T>, ValidationReport> {
        validate_scenario(self)
    }
}

/// Parses and validates a scenario file in one step.
pub fn load_scenario<T: Real>(text: &str) -> Result<ValidScenario<T>, ScenarioError> {
    Ok(ScenarioConfig::from_toml_str(text)?.validate()?)
}
