//! Tick-by-tick closed loop: snapshot, serve from the current placement,
//! collect delay feedback, and re-solve when the controller asks for it.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delay::{average_service_delay, ServiceDelay};
use crate::metrics::{average_summaries, summarize, MetricsError, TrialSummary};
use crate::mobility::{generate_synthetic, snapshot_at, DemandProfile, Trace, TraceError};
use crate::model::{EdgeId, Placement, ServiceId, ValidScenario};
use crate::optimizer::{solve, Infeasibility, ObjectiveKind, PlacementProblem, ProblemError, SolveError};
use crate::rl::{LearningParams, QTable, RlError};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Solve once at the first tick and keep that placement.
    Static,
    /// Q-learning controlled re-optimization.
    #[serde(rename = "rl")]
    RlDynamic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 2] = [PolicyKind::Static, PolicyKind::RlDynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Static => "static",
            PolicyKind::RlDynamic => "rl",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(PolicyKind::Static),
            "rl" | "rl-dynamic" | "dynamic" => Ok(PolicyKind::RlDynamic),
            other => Err(format!("unknown policy '{other}' (expected static|rl)")),
        }
    }
}

/// Policy and objective of one experiment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arm {
    pub policy: PolicyKind,
    pub objective: ObjectiveKind,
}

impl Arm {
    /// The four arms in report column order.
    pub const ALL: [Arm; 4] = [
        Arm::new(PolicyKind::Static, ObjectiveKind::Delay),
        Arm::new(PolicyKind::RlDynamic, ObjectiveKind::Delay),
        Arm::new(PolicyKind::Static, ObjectiveKind::Utilization),
        Arm::new(PolicyKind::RlDynamic, ObjectiveKind::Utilization),
    ];

    pub const fn new(policy: PolicyKind, objective: ObjectiveKind) -> Self {
        Arm { policy, objective }
    }

    pub fn label(self) -> String {
        format!("{}_{}", self.policy, self.objective)
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.policy, self.objective)
    }
}

/// Parses a [`label`](Arm::label) such as `rl_su`.
impl std::str::FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, o) = s
            .split_once('_')
            .ok_or_else(|| format!("unknown arm '{s}' (expected <static|rl>_<delay|su>)"))?;
        Ok(Arm::new(p.parse()?, o.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceTick<T> {
    pub service: ServiceId,
    pub host: EdgeId,
    pub requesters: u32,
    pub avg_delay: ServiceDelay<T>,
    pub threshold: T,
    /// Controller state after this tick's feedback; `None` under the static policy.
    pub reward: Option<T>,
    pub q_value: Option<T>,
    pub decrements: u8,
}

impl<T: Real> ServiceTick<T> {
    pub fn violated(&self) -> bool {
        !self.avg_delay.within(self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTick<T> {
    pub edge: EdgeId,
    pub hosted: Option<ServiceId>,
    /// `R_s / C_i` of the hosted service, 0 when idle.
    pub utilization: T,
}

/// What happened during one monitoring tick. `per_service` describes the
/// placement that served the tick; a re-optimization takes effect next tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord<T> {
    pub time: T,
    pub per_service: Vec<ServiceTick<T>>,
    pub per_edge: Vec<EdgeTick<T>>,
    pub reoptimized: bool,
    /// A re-solve was requested but infeasible; the old placement was kept.
    pub resolve_failed: bool,
}

impl<T: Real> TickRecord<T> {
    pub fn any_violation(&self) -> bool {
        self.per_service.iter().any(ServiceTick::violated)
    }

    pub fn placement(&self) -> Placement {
        Placement::new(self.per_service.iter().map(|s| s.host).collect()).expect("tick hosts are distinct")
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no feasible placement at the first tick: {0}")]
    InfeasibleAtStart(Infeasibility),
    #[error("trace ends at t={available} but the horizon needs t={needed}")]
    TraceTooShort { needed: f64, available: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

struct Loop<'a, T> {
    scenario: &'a ValidScenario<T>,
    objective: ObjectiveKind,
}

impl<T: Real> Loop<'_, T> {
    fn problem(&self, snapshot: &crate::model::RequestSnapshot<T>) -> Result<PlacementProblem<T>, ProblemError> {
        PlacementProblem::from_snapshot(
            &self.scenario.services,
            &self.scenario.edges,
            snapshot,
            &self.scenario.delay,
            self.objective,
            self.scenario.balance_offset,
        )
    }

    fn record(
        &self,
        time: T,
        placement: &Placement,
        delays: &[ServiceDelay<T>],
        requesters: &[u32],
        table: Option<&QTable<T>>,
    ) -> TickRecord<T> {
        let sc = self.scenario;
        let per_service = placement
            .iter()
            .map(|(s, host)| {
                let rec = table.and_then(|t| t.record(s));
                ServiceTick {
                    service: s,
                    host,
                    requesters: requesters[s.0],
                    avg_delay: delays[s.0],
                    threshold: sc.services[s.0].delay_threshold,
                    reward: rec.map(|r| r.last_reward),
                    q_value: rec.map(|r| r.q_value),
                    decrements: rec.map_or(0, |r| r.consecutive_decrements),
                }
            })
            .collect();
        let per_edge = sc
            .edges
            .iter()
            .map(|e| {
                let hosted = placement.guest(e.id);
                EdgeTick {
                    edge: e.id,
                    hosted,
                    utilization: hosted.map_or(T::zero(), |s| sc.services[s.0].resource_demand / e.capacity),
                }
            })
            .collect();
        TickRecord {
            time,
            per_service,
            per_edge,
            reoptimized: false,
            resolve_failed: false,
        }
    }
}

/// Runs one trial over `trace` with the given demand process.
pub fn run<T: Real>(
    scenario: &ValidScenario<T>,
    trace: &Trace<T>,
    mut demand: DemandProfile,
    policy: PolicyKind,
    objective: ObjectiveKind,
) -> Result<Vec<TickRecord<T>>, SimError> {
    let ticks = scenario.tick_count();
    let last = scenario.tick_time(ticks);
    if trace.end_time() < last - T::lit(1e-6) {
        return Err(SimError::TraceTooShort {
            needed: last.as_f64(),
            available: trace.end_time().as_f64(),
        });
    }
    let lp = Loop { scenario, objective };
    let learning = LearningParams {
        alpha: scenario.learning_rate,
        gamma: scenario.discount,
        penalty: scenario.violation_penalty,
    };
    let ns = scenario.service_count();
    let mut out = Vec::with_capacity(ticks);

    // First tick: one optimization over the initial snapshot.
    let t1 = scenario.tick_time(1);
    let snap = snapshot_at(trace, t1, &demand, ns);
    let problem = lp.problem(&snap)?;
    let initial = match solve(&problem) {
        Ok(s) => s,
        Err(SolveError::Infeasible(why)) => return Err(SimError::InfeasibleAtStart(why)),
        Err(e) => return Err(e.into()),
    };
    let mut placement = initial.placement.clone();
    let mut table = match policy {
        PolicyKind::RlDynamic => Some(QTable::initialize(&initial, t1)?),
        PolicyKind::Static => None,
    };
    out.push(lp.record(
        t1,
        &placement,
        &initial.service_delays,
        &snap.demand().0,
        table.as_ref(),
    ));

    for k in 2..=ticks {
        let time = scenario.tick_time(k);
        demand.advance();
        let snap = snapshot_at(trace, time, &demand, ns);
        let delays: Vec<ServiceDelay<T>> = placement
            .iter()
            .map(|(s, e)| average_service_delay(&snap, s, &scenario.edges[e.0], &scenario.edges, &scenario.delay))
            .collect();
        let requesters = snap.demand().0;

        let mut trigger = false;
        if let Some(table) = table.as_mut() {
            for (s, _) in placement.iter() {
                let threshold = scenario.services[s.0].delay_threshold;
                let (_, decision) = table.observe_feedback(s, delays[s.0], threshold, &learning, time)?;
                trigger |= decision.is_trigger();
            }
        }
        let mut rec = lp.record(time, &placement, &delays, &requesters, table.as_ref());

        if trigger {
            let problem = lp.problem(&snap)?;
            match solve(&problem) {
                Ok(solution) => {
                    placement = solution.placement.clone();
                    if let Some(table) = table.as_mut() {
                        table.reinitialize(&solution, time)?;
                    }
                    rec.reoptimized = true;
                }
                Err(SolveError::Infeasible(_)) => rec.resolve_failed = true,
                Err(e) => return Err(e.into()),
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Where trial traces come from.
#[derive(Debug, Clone)]
pub enum TraceSource<T> {
    /// Fresh random-waypoint trace per trial, seeded by the trial seed.
    Synthetic,
    /// One recorded trace shared by all trials; only demand varies.
    Recorded(Trace<T>),
}

impl<T: Real> TraceSource<T> {
    pub fn trace_for(&self, scenario: &ValidScenario<T>, seed: u64) -> Result<Trace<T>, TraceError> {
        match self {
            TraceSource::Synthetic => {
                let samples = generate_synthetic(&scenario.mobility, scenario.vehicle_count, scenario.horizon, seed);
                Ok(Trace::new(samples)?.with_end(scenario.tick_time(scenario.tick_count())))
            }
            TraceSource::Recorded(trace) => Ok(trace.clone()),
        }
    }
}

/// One completed trial of one arm.
#[derive(Debug, Clone)]
pub struct TrialRun<T> {
    pub trial: usize,
    pub seed: u64,
    pub arm: Arm,
    pub ticks: Vec<TickRecord<T>>,
    pub summary: TrialSummary<T>,
}

#[derive(Debug, Clone)]
pub struct TrialSet<T> {
    pub runs: Vec<TrialRun<T>>,
    pub average: TrialSummary<T>,
}

/// Runs one trial of `arm` with the given seed.
pub fn run_trial<T: Real>(
    scenario: &ValidScenario<T>,
    source: &TraceSource<T>,
    arm: Arm,
    trial: usize,
    seed: u64,
) -> Result<TrialRun<T>, SimError> {
    let trace = source.trace_for(scenario, seed)?;
    let demand = DemandProfile::uniform(
        trace.vehicle_ids(),
        scenario.service_count(),
        scenario.churn_rate.as_f64(),
        seed,
    );
    let ticks = run(scenario, &trace, demand, arm.policy, arm.objective)?;
    let summary = summarize(&ticks, scenario, arm)?;
    Ok(TrialRun {
        trial,
        seed,
        arm,
        ticks,
        summary,
    })
}

/// Trials `1..=n_trials`, trial `k` seeded with `base_seed + k - 1`, run in
/// parallel and returned in trial order together with their average.
pub fn run_trials<T: Real>(
    scenario: &ValidScenario<T>,
    source: &TraceSource<T>,
    policy: PolicyKind,
    objective: ObjectiveKind,
    n_trials: usize,
    base_seed: u64,
) -> Result<TrialSet<T>, SimError> {
    assert!(n_trials >= 1, "at least one trial");
    let arm = Arm::new(policy, objective);
    let runs = (0..n_trials)
        .into_par_iter()
        .map(|k| run_trial(scenario, source, arm, k + 1, base_seed.wrapping_add(k as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let average = average_summaries(runs.iter().map(|r| &r.summary))?;
    Ok(TrialSet { runs, average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::TraceSample;
    use crate::model::{Point, ScenarioConfig, VehicleId};
    use std::collections::BTreeMap;

    fn small_scenario(horizon: f64) -> ValidScenario<f64> {
        ScenarioConfig::<f64> {
            horizon,
            ..Default::default()
        }
        .validate()
        .unwrap()
    }

    /// Vehicles parked at fixed positions for the whole horizon.
    fn parked_trace(sc: &ValidScenario<f64>, positions: &[(f64, f64)]) -> Trace<f64> {
        let mut samples = Vec::new();
        for k in 1..=sc.tick_count() {
            for (v, &(x, y)) in positions.iter().enumerate() {
                samples.push(TraceSample {
                    time: sc.tick_time(k),
                    vehicle_id: VehicleId(format!("v{v}")),
                    position: Point::new(x, y),
                    speed: Some(0.0),
                });
            }
        }
        Trace::new(samples).unwrap()
    }

    fn fixed_demand(n: usize, services: usize) -> DemandProfile {
        let sub: BTreeMap<_, _> = (0..n)
            .map(|v| (VehicleId(format!("v{v}")), ServiceId(v % services)))
            .collect();
        DemandProfile::fixed(sub, services)
    }

    #[test]
    fn static_policy_never_moves() {
        let sc = small_scenario(60.0);
        let trace = TraceSource::Synthetic.trace_for(&sc, 3).unwrap();
        let demand = DemandProfile::uniform(trace.vehicle_ids(), 6, 0.02, 3);
        let ticks = run(&sc, &trace, demand, PolicyKind::Static, ObjectiveKind::Delay).unwrap();
        assert_eq!(ticks.len(), 60);
        let first = ticks[0].placement();
        for t in &ticks[1..] {
            assert!(!t.reoptimized);
            assert_eq!(t.placement(), first);
            assert!(t.per_service.iter().all(|s| s.q_value.is_none()));
        }
    }

    #[test]
    fn stationary_world_never_triggers() {
        let sc = small_scenario(40.0);
        let pos: Vec<(f64, f64)> = (0..30)
            .map(|v| (100.0 + 40.0 * v as f64, 200.0 + 25.0 * v as f64))
            .collect();
        let trace = parked_trace(&sc, &pos);
        for objective in ObjectiveKind::ALL {
            let ticks = run(&sc, &trace, fixed_demand(30, 6), PolicyKind::RlDynamic, objective).unwrap();
            assert!(ticks.iter().all(|t| !t.reoptimized));
            assert!(ticks[1..].iter().all(|t| t
                .per_service
                .iter()
                .all(|s| s.reward == Some(1.0) && s.q_value == Some(1.0))));
        }
    }

    #[test]
    fn threshold_violation_forces_reoptimization() {
        // One service with one requester; the vehicle jumps far from every
        // eNB at t=5, pushing the mean delay over the threshold.
        let mut cfg = ScenarioConfig::<f64> {
            horizon: 10.0,
            ..Default::default()
        };
        cfg.services.truncate(1);
        cfg.services[0].delay_threshold = 2.0;
        let sc = cfg.validate().unwrap();
        let e0 = sc.edges[0].position;
        let mut samples = Vec::new();
        for k in 1..=10 {
            let p = if k < 5 { e0 } else { Point::new(1700.0, 1700.0) };
            samples.push(TraceSample {
                time: k as f64,
                vehicle_id: "v0".into(),
                position: p,
                speed: None,
            });
        }
        let trace = Trace::new(samples).unwrap();
        let demand = fixed_demand(1, 1);
        let ticks = run(&sc, &trace, demand, PolicyKind::RlDynamic, ObjectiveKind::Delay).unwrap();
        assert!(!ticks[3].reoptimized);
        assert!(ticks[4].per_service[0].violated());
        assert!(ticks[4].reoptimized || ticks[4].resolve_failed);
        assert_eq!(ticks[4].per_service[0].reward, Some(-10.0));
    }

    #[test]
    fn trace_too_short() {
        let sc = small_scenario(50.0);
        let pos = [(10.0, 10.0)];
        let short = Trace::new(parked_trace(&small_scenario(20.0), &pos).into_samples()).unwrap();
        let err = run(
            &sc,
            &short,
            fixed_demand(1, 6),
            PolicyKind::Static,
            ObjectiveKind::Delay,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::TraceTooShort { .. }));
    }

    #[test]
    fn infeasible_start() {
        let mut cfg = ScenarioConfig::<f64> {
            horizon: 5.0,
            ..Default::default()
        };
        cfg.services[0].resource_demand = 500.0;
        let sc = cfg.validate().unwrap();
        let trace = parked_trace(&sc, &[(10.0, 10.0)]);
        let err = run(
            &sc,
            &trace,
            fixed_demand(1, 6),
            PolicyKind::RlDynamic,
            ObjectiveKind::Delay,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::InfeasibleAtStart(_)));
    }

    #[test]
    fn trials_are_ordered_and_paired() {
        let sc = small_scenario(30.0);
        let a = run_trials(
            &sc,
            &TraceSource::Synthetic,
            PolicyKind::Static,
            ObjectiveKind::Delay,
            3,
            42,
        )
        .unwrap();
        let b = run_trials(
            &sc,
            &TraceSource::Synthetic,
            PolicyKind::RlDynamic,
            ObjectiveKind::Delay,
            3,
            42,
        )
        .unwrap();
        assert_eq!(a.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![42, 43, 44]);
        assert_eq!(a.runs.iter().map(|r| r.trial).collect::<Vec<_>>(), vec![1, 2, 3]);
        for arm in Arm::ALL {
            assert_eq!(arm.label().parse::<Arm>(), Ok(arm));
        }
        assert!("rl".parse::<Arm>().is_err());
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.ticks.len(), y.ticks.len());
            for (tx, ty) in x.ticks.iter().zip(&y.ticks) {
                let rx: Vec<u32> = tx.per_service.iter().map(|s| s.requesters).collect();
                let ry: Vec<u32> = ty.per_service.iter().map(|s| s.requesters).collect();
                assert_eq!(rx, ry);
            }
        }
        let one = run_trials(
            &sc,
            &TraceSource::Synthetic,
            PolicyKind::Static,
            ObjectiveKind::Delay,
            1,
            42,
        )
        .unwrap();
        assert_eq!(one.average.jain_index, one.runs[0].summary.jain_index);
        assert_eq!(
            one.average.mean_utilization_pct,
            one.runs[0].summary.mean_utilization_pct
        );
    }
}
