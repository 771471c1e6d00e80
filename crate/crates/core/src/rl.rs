//! Per-service Q-learning bookkeeping that decides when the placement has to
//! be recomputed.
//!
//! Each service holds the Q-value of its current host. Delay feedback yields a
//! reward (1 when the mean delay did not grow, 0.5 when it grew but stayed
//! under threshold, the configured penalty on a violation), the Q-value is
//! updated, and a re-optimization is requested when the Q-value dropped on two
//! consecutive observations or the threshold was violated.

use serde::Serialize;
use thiserror::Error;

use crate::delay::ServiceDelay;
use crate::model::{EdgeId, Placement, ServiceId};
use crate::optimizer::PlacementSolution;
use crate::scalar::Real;

pub const REWARD_DECREASED: f64 = 1.0;
pub const REWARD_INCREASED: f64 = 0.5;
/// Consecutive Q-value drops that force a re-optimization.
pub const DECREMENT_TRIGGER: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams<T> {
    pub alpha: T,
    pub gamma: T,
    pub penalty: T,
}

impl<T: Real> Default for LearningParams<T> {
    fn default() -> Self {
        LearningParams {
            alpha: T::lit(0.75),
            gamma: T::zero(),
            penalty: T::lit(-10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QRecord<T> {
    pub service_id: ServiceId,
    /// Edge currently hosting the service.
    pub action: EdgeId,
    pub q_value: T,
    pub last_reward: T,
    /// Mean delay of the previous observation, ms (0 without demand).
    pub prev_feedback_delay: T,
    pub consecutive_decrements: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriggerDecision {
    NoTrigger,
    Trigger(TriggerCause),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriggerCause {
    ConsecutiveDecrements,
    DelayViolation,
}

impl TriggerDecision {
    pub fn is_trigger(self) -> bool {
        matches!(self, TriggerDecision::Trigger(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RlError {
    #[error("no Q-table record for service {0}")]
    UnknownService(ServiceId),
    #[error("cannot initialize the Q-table from an infeasible solution")]
    InfeasibleSolution,
}

/// Eq-10 style reward for a delay transition.
///
/// A delay that did not grow and is under threshold earns 1 (checked first,
/// so equal delays earn 1), one that grew but is under threshold earns 0.5,
/// anything else earns `penalty`.
pub fn reward<T: Real>(prev_delay: T, curr_delay: T, threshold: T, penalty: T) -> T {
    if curr_delay < threshold {
        if prev_delay >= curr_delay {
            T::lit(REWARD_DECREASED)
        } else {
            T::lit(REWARD_INCREASED)
        }
    } else {
        penalty
    }
}

/// Reward for a per-service observation; no demand counts as zero delay.
pub fn feedback_reward<T: Real>(prev_delay: T, curr: ServiceDelay<T>, threshold: T, penalty: T) -> T {
    reward(prev_delay, curr.cost(), threshold, penalty)
}

/// `alpha * r + gamma * max_future_q + (1 - alpha) * old_q`.
pub fn q_update<T: Real>(old_q: T, reward_value: T, max_future_q: T, alpha: T, gamma: T) -> T {
    alpha * reward_value + gamma * max_future_q + (T::one() - alpha) * old_q
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QTable<T> {
    records: Vec<QRecord<T>>,
    pub last_update_time: T,
}

impl<T: Real> QTable<T> {
    /// Fresh table from a solved placement: every record starts at Q = 1
    /// (the chosen entry of the decision matrix), reward 0, counter 0.
    pub fn initialize(solution: &PlacementSolution<T>, time: T) -> Result<Self, RlError> {
        if !solution.feasible {
            return Err(RlError::InfeasibleSolution);
        }
        let records = solution
            .placement
            .iter()
            .map(|(s, e)| QRecord {
                service_id: s,
                action: e,
                q_value: T::one(),
                last_reward: T::zero(),
                prev_feedback_delay: solution.service_delays.get(s.0).map_or(T::zero(), |d| d.cost()),
                consecutive_decrements: 0,
            })
            .collect();
        Ok(QTable {
            records,
            last_update_time: time,
        })
    }

    /// Replaces every record after a global re-optimization.
    pub fn reinitialize(&mut self, solution: &PlacementSolution<T>, time: T) -> Result<(), RlError> {
        *self = QTable::initialize(solution, time)?;
        Ok(())
    }

    pub fn records(&self) -> &[QRecord<T>] {
        &self.records
    }

    pub fn record(&self, service: ServiceId) -> Option<&QRecord<T>> {
        self.records.get(service.0)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The placement the table's actions describe.
    pub fn placement(&self) -> Placement {
        Placement::new(self.records.iter().map(|r| r.action).collect()).expect("Q-table actions come from a placement")
    }

    /// Applies one delay observation for `service` and decides whether the
    /// placement must be recomputed.
    pub fn observe_feedback(
        &mut self,
        service: ServiceId,
        curr: ServiceDelay<T>,
        threshold: T,
        params: &LearningParams<T>,
        time: T,
    ) -> Result<(QRecord<T>, TriggerDecision), RlError> {
        let rec = self
            .records
            .get_mut(service.0)
            .ok_or(RlError::UnknownService(service))?;
        let curr_delay = curr.cost();
        let r = reward(rec.prev_feedback_delay, curr_delay, threshold, params.penalty);
        let old_q = rec.q_value;
        // No next-state enumeration exists; the record's own value stands in.
        let new_q = q_update(old_q, r, old_q, params.alpha, params.gamma);

        rec.q_value = new_q;
        rec.last_reward = r;
        rec.prev_feedback_delay = curr_delay;
        rec.consecutive_decrements = if new_q < old_q {
            rec.consecutive_decrements.saturating_add(1)
        } else {
            0
        };

        let decision = if r == params.penalty {
            TriggerDecision::Trigger(TriggerCause::DelayViolation)
        } else if rec.consecutive_decrements >= DECREMENT_TRIGGER {
            TriggerDecision::Trigger(TriggerCause::ConsecutiveDecrements)
        } else {
            TriggerDecision::NoTrigger
        };
        if rec.consecutive_decrements >= DECREMENT_TRIGGER {
            rec.consecutive_decrements = 0;
        }
        self.last_update_time = time;
        Ok((rec.clone(), decision))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::FeasibilityReport;
    use proptest::prelude::*;

    fn solution(hosts: &[usize], delays: &[f64]) -> PlacementSolution<f64> {
        PlacementSolution {
            placement: Placement::new(hosts.iter().copied().map(EdgeId).collect()).unwrap(),
            objective_value: 0.0,
            feasible: true,
            report: FeasibilityReport::default(),
            service_delays: delays.iter().map(|&d| ServiceDelay::Mean(d)).collect(),
            evaluated: 1,
        }
    }

    #[test]
    fn reward_cases() {
        assert_eq!(reward(3.0, 2.0, 5.0, -10.0), 1.0);
        assert_eq!(reward(2.0, 3.0, 5.0, -10.0), 0.5);
        assert_eq!(reward(3.0, 5.5, 5.0, -10.0), -10.0);
        assert_eq!(reward(2.0, 2.0, 5.0, -10.0), 1.0);
        assert_eq!(reward(2.0, 5.0, 5.0, -10.0), -10.0);
        assert_eq!(feedback_reward(4.0, ServiceDelay::NoDemand, 5.0, -10.0), 1.0);
    }

    #[test]
    fn q_update_cases() {
        assert_eq!(q_update(0.0, 1.0, 0.0, 0.75, 0.0), 0.75);
        assert_eq!(q_update(1.0, 1.0, 1.0, 0.75, 0.0), 1.0);
        assert_eq!(q_update(1.0, -10.0, 1.0, 0.75, 0.0), -7.25);
        assert_eq!(q_update(0.0, 1.0, 2.0, 0.5, 0.5), 1.5);
    }

    #[test]
    fn initialize_sets_unit_q() {
        let t = QTable::initialize(&solution(&[3, 0, 1, 2, 5, 4], &[1.0; 6]), 1.0).unwrap();
        assert_eq!(t.len(), 6);
        assert!(t
            .records()
            .iter()
            .all(|r| r.q_value == 1.0 && r.consecutive_decrements == 0));
        assert_eq!(t.record(ServiceId(0)).unwrap().action, EdgeId(3));
        assert_eq!(t.placement().hosts(), &[3, 0, 1, 2, 5, 4].map(EdgeId));
    }

    #[test]
    fn initialize_rejects_infeasible_and_allows_empty() {
        let mut s = solution(&[0], &[1.0]);
        s.feasible = false;
        assert_eq!(QTable::initialize(&s, 1.0), Err(RlError::InfeasibleSolution));
        assert!(QTable::initialize(&solution(&[], &[]), 1.0).unwrap().is_empty());
    }

    #[test]
    fn two_increases_trigger_on_second() {
        let p = LearningParams::default();
        let mut t = QTable::initialize(&solution(&[0], &[2.0]), 1.0).unwrap();
        let (r1, d1) = t
            .observe_feedback(ServiceId(0), ServiceDelay::Mean(2.5), 5.0, &p, 2.0)
            .unwrap();
        assert_eq!(r1.q_value, 0.625);
        assert_eq!(r1.consecutive_decrements, 1);
        assert_eq!(d1, TriggerDecision::NoTrigger);
        let (r2, d2) = t
            .observe_feedback(ServiceId(0), ServiceDelay::Mean(3.0), 5.0, &p, 3.0)
            .unwrap();
        assert_eq!(r2.q_value, 0.53125);
        assert_eq!(d2, TriggerDecision::Trigger(TriggerCause::ConsecutiveDecrements));
        assert_eq!(r2.consecutive_decrements, 0);
    }

    #[test]
    fn two_increases_with_quarter_learning_rate() {
        let p = LearningParams {
            alpha: 0.25,
            ..LearningParams::default()
        };
        let mut t = QTable::initialize(&solution(&[0], &[2.0]), 1.0).unwrap();
        let (r1, _) = t
            .observe_feedback(ServiceId(0), ServiceDelay::Mean(2.5), 5.0, &p, 2.0)
            .unwrap();
        assert_eq!(r1.q_value, 0.875);
        let (r2, d2) = t
            .observe_feedback(ServiceId(0), ServiceDelay::Mean(3.0), 5.0, &p, 3.0)
            .unwrap();
        assert_eq!(r2.q_value, 0.78125);
        assert!(d2.is_trigger());
    }

    #[test]
    fn violation_triggers_immediately() {
        let p = LearningParams::default();
        let mut t = QTable::initialize(&solution(&[0], &[2.0]), 1.0).unwrap();
        let (r, d) = t
            .observe_feedback(ServiceId(0), ServiceDelay::Mean(6.0), 5.5, &p, 2.0)
            .unwrap();
        assert_eq!(d, TriggerDecision::Trigger(TriggerCause::DelayViolation));
        assert_eq!(r.q_value, 0.75 * -10.0 + 0.25 * 1.0);
        assert_eq!(r.last_reward, -10.0);
    }

    #[test]
    fn alternating_never_triggers() {
        let p = LearningParams::default();
        let mut t = QTable::initialize(&solution(&[0], &[2.0]), 1.0).unwrap();
        for (k, d) in [2.5, 2.0, 2.6, 2.1].into_iter().enumerate() {
            let (_, dec) = t
                .observe_feedback(ServiceId(0), ServiceDelay::Mean(d), 5.0, &p, 2.0 + k as f64)
                .unwrap();
            assert_eq!(dec, TriggerDecision::NoTrigger);
        }
    }

    #[test]
    fn unknown_service() {
        let p = LearningParams::default();
        let mut t = QTable::initialize(&solution(&[0], &[2.0]), 1.0).unwrap();
        assert_eq!(
            t.observe_feedback(ServiceId(4), ServiceDelay::NoDemand, 5.0, &p, 2.0),
            Err(RlError::UnknownService(ServiceId(4)))
        );
    }

    #[test]
    fn reinitialize_refreshes_records() {
        let p = LearningParams::default();
        let mut t = QTable::initialize(&solution(&[0, 1], &[2.0, 2.0]), 1.0).unwrap();
        t.observe_feedback(ServiceId(0), ServiceDelay::Mean(3.0), 5.0, &p, 2.0)
            .unwrap();
        t.reinitialize(&solution(&[1, 0], &[1.5, 1.7]), 2.0).unwrap();
        let r0 = t.record(ServiceId(0)).unwrap();
        assert_eq!((r0.action, r0.q_value, r0.consecutive_decrements), (EdgeId(1), 1.0, 0));
        assert_eq!(r0.prev_feedback_delay, 1.5);
        assert_eq!(t.last_update_time, 2.0);
    }

    proptest! {
        #[test]
        fn bounded_without_violations(q0 in -2.0..3.0f64, rewards in prop::collection::vec(prop::bool::ANY, 0..60)) {
            let lo = q0.min(0.5);
            let hi = q0.max(1.0);
            let mut q = q0;
            for up in rewards {
                let r = if up { 0.5 } else { 1.0 };
                q = q_update(q, r, q, 0.75, 0.0);
                prop_assert!(q >= lo - 1e-12 && q <= hi + 1e-12);
            }
        }

        #[test]
        fn geometric_convergence(q0 in -10.0..10.0f64, r in prop::sample::select(vec![0.5, 1.0, -10.0]), alpha in 0.05..1.0f64, steps in 0usize..40) {
            let mut q = q0;
            for _ in 0..steps {
                q = q_update(q, r, q, alpha, 0.0);
            }
            let expected = (1.0 - alpha).powi(steps as i32) * (q0 - r).abs();
            prop_assert!(((q - r).abs() - expected).abs() <= 1e-9 * (1.0 + q0.abs()));
        }

        #[test]
        fn violation_always_triggers(prefix in prop::collection::vec(1.0..4.0f64, 0..10), bad in 5.0..20.0f64) {
            let p = LearningParams::default();
            let mut t = QTable::initialize(&solution(&[0], &[2.0]), 1.0).unwrap();
            for d in prefix {
                t.observe_feedback(ServiceId(0), ServiceDelay::Mean(d), 5.0, &p, 1.0).unwrap();
            }
            let (_, dec) = t.observe_feedback(ServiceId(0), ServiceDelay::Mean(bad), 5.0, &p, 1.0).unwrap();
            prop_assert_eq!(dec, TriggerDecision::Trigger(TriggerCause::DelayViolation));
        }
    }
}
