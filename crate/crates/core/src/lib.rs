//! Dynamic placement of services onto capacity-limited edge servers in a
//! vehicular network.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: services, edges, requests, placements, scenario configuration.
//! * [`delay`]: distance-based per-vehicle and per-service delay.
//! * [`optimizer`]: exact constrained assignment under a delay or a
//!   utilization objective, with a brute-force reference solver.
//! * [`rl`]: Q-table, reward, update rule and re-optimization trigger.
//! * [`mobility`]: FCD/CSV trace parsing, random-waypoint generation,
//!   demand profiles, eNB layout.
//! * [`sim`]: the per-tick control loop and multi-trial runner.
//! * [`metrics`] and [`report`]: fairness/utilization/delay metrics and the
//!   CSV files written by the command line tool.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command line tool uses.

// Validation is written as `!(x > 0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod metrics;
pub mod mobility;
pub mod model;
pub mod optimizer;
pub mod problem_file;
pub mod report;
pub mod rl;
mod scalar;
pub mod sim;

pub use scalar::Real;

pub use delay::{average_service_delay, vehicle_delay, ServiceDelay};
pub use metrics::{compare_report, jain_index, summarize};
pub use model::{validate_scenario, EdgeId, Placement, ServiceId, VehicleId};
pub use optimizer::{brute_force_solve, check_feasibility, objective_value, solve, Constraint, ObjectiveKind};
pub use rl::{q_update, reward};
pub use sim::{run, run_trials, Arm, PolicyKind};

pub type Point = model::Point<f64>;
pub type Area = model::Area<f64>;
pub type ServiceSpec = model::ServiceSpec<f64>;
pub type EdgeNode = model::EdgeNode<f64>;
pub type ServiceRequest = model::ServiceRequest<f64>;
pub type RequestSnapshot = model::RequestSnapshot<f64>;
pub type ScenarioConfig = model::ScenarioConfig<f64>;
pub type ValidScenario = model::ValidScenario<f64>;
pub type DelayModelParams = delay::DelayModelParams<f64>;
pub type PlacementProblem = optimizer::PlacementProblem<f64>;
pub type PlacementSolution = optimizer::PlacementSolution<f64>;
pub type QTable = rl::QTable<f64>;
pub type QRecord = rl::QRecord<f64>;
pub type TraceSample = mobility::TraceSample<f64>;
pub type Trace = mobility::Trace<f64>;
pub type SyntheticParams = mobility::SyntheticParams<f64>;
pub type TickRecord = sim::TickRecord<f64>;
pub type TrialRun = sim::TrialRun<f64>;
pub type TrialSummary = metrics::TrialSummary<f64>;
