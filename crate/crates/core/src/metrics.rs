//! Evaluation metrics: per-service delay, edge utilization and Jain's
//! fairness index, per trial and across trials.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::ValidScenario;
use crate::optimizer::ObjectiveKind;
use crate::scalar::Real;
use crate::sim::{Arm, PolicyKind, TickRecord, TrialRun};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("jain index of an empty vector")]
    Empty,
    #[error("jain index undefined when every value is zero")]
    AllZero,
    #[error("no input to summarize")]
    EmptyInput,
    #[error("no runs for arm {0}")]
    MissingArm(Arm),
    #[error("summaries disagree on {0}")]
    Inconsistent(&'static str),
}

/// `(sum v)^2 / (n * sum v^2)`: 1 for equal shares, `1/n` when one value
/// holds everything.
pub fn jain_index<T: Real>(values: &[T]) -> Result<T, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: T = values.iter().copied().sum();
    let sq: T = values.iter().map(|&v| v * v).sum();
    if sq == T::zero() {
        return Err(MetricsError::AllZero);
    }
    let n = T::from_usize(values.len()).expect("length fits scalar");
    Ok(sum * sum / (n * sq))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary<T> {
    pub policy: PolicyKind,
    pub objective: ObjectiveKind,
    /// Mean over ticks with demand; `None` if the service was never requested.
    pub per_service_mean_delay: Vec<Option<T>>,
    /// Time-averaged `R_s / C_i` of each edge (0 while idle).
    pub per_edge_mean_utilization: Vec<T>,
    /// Jain's index over `per_edge_mean_utilization`; `None` if all zero.
    pub jain_index: Option<T>,
    /// Mean over hosting edges, time-averaged, in percent.
    pub mean_utilization_pct: T,
    /// Ticks where at least one service's mean delay reached its threshold.
    pub violation_ticks: usize,
    /// Ticks where this service's mean delay reached its threshold.
    pub per_service_violation_ticks: Vec<usize>,
    pub reopt_count: usize,
    pub resolve_failures: usize,
    pub ticks: usize,
}

impl<T: Real> TrialSummary<T> {
    pub fn arm(&self) -> Arm {
        Arm::new(self.policy, self.objective)
    }
}

fn count<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count fits scalar")
}

/// Aggregates one trial's tick stream.
pub fn summarize<T: Real>(
    ticks: &[TickRecord<T>],
    scenario: &ValidScenario<T>,
    arm: Arm,
) -> Result<TrialSummary<T>, MetricsError> {
    if ticks.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ns = scenario.service_count();
    let ne = scenario.edge_count();

    let mut delay_sum = vec![T::zero(); ns];
    let mut delay_n = vec![0usize; ns];
    let mut util_sum = vec![T::zero(); ne];
    let mut hosting_pct_sum = T::zero();
    let mut violation_ticks = 0;
    let mut per_service_violation_ticks = vec![0usize; ns];
    let mut reopt_count = 0;
    let mut resolve_failures = 0;

    for tick in ticks {
        for s in &tick.per_service {
            if let Some(d) = s.avg_delay.mean() {
                delay_sum[s.service.0] = delay_sum[s.service.0] + d;
                delay_n[s.service.0] += 1;
            }
            per_service_violation_ticks[s.service.0] += usize::from(s.violated());
        }
        let mut hosting = 0usize;
        let mut hosting_sum = T::zero();
        for e in &tick.per_edge {
            util_sum[e.edge.0] = util_sum[e.edge.0] + e.utilization;
            if e.hosted.is_some() {
                hosting += 1;
                hosting_sum = hosting_sum + e.utilization;
            }
        }
        if hosting > 0 {
            hosting_pct_sum = hosting_pct_sum + hosting_sum / count::<T>(hosting);
        }
        violation_ticks += usize::from(tick.any_violation());
        reopt_count += usize::from(tick.reoptimized);
        resolve_failures += usize::from(tick.resolve_failed);
    }

    let n = count::<T>(ticks.len());
    let per_edge_mean_utilization: Vec<T> = util_sum.into_iter().map(|u| u / n).collect();
    let jain = match jain_index(&per_edge_mean_utilization) {
        Ok(j) => Some(j),
        Err(MetricsError::AllZero | MetricsError::Empty) => None,
        Err(e) => return Err(e),
    };
    Ok(TrialSummary {
        policy: arm.policy,
        objective: arm.objective,
        per_service_mean_delay: delay_sum
            .into_iter()
            .zip(delay_n)
            .map(|(s, k)| (k > 0).then(|| s / count::<T>(k)))
            .collect(),
        per_edge_mean_utilization,
        jain_index: jain,
        mean_utilization_pct: hosting_pct_sum / n * T::lit(100.0),
        violation_ticks,
        per_service_violation_ticks,
        reopt_count,
        resolve_failures,
        ticks: ticks.len(),
    })
}

fn mean_of<T: Real>(values: impl Iterator<Item = T>) -> Option<T> {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / count::<T>(n))
}

/// Field-wise mean of several trials of the same arm. Counts are averaged
/// and rounded to the nearest integer.
pub fn average_summaries<'a, T: Real>(
    summaries: impl IntoIterator<Item = &'a TrialSummary<T>>,
) -> Result<TrialSummary<T>, MetricsError> {
    let all: Vec<&TrialSummary<T>> = summaries.into_iter().collect();
    let first = *all.first().ok_or(MetricsError::EmptyInput)?;
    if all.iter().any(|s| s.arm() != first.arm()) {
        return Err(MetricsError::Inconsistent("arm"));
    }
    let ns = first.per_service_mean_delay.len();
    let ne = first.per_edge_mean_utilization.len();
    if all
        .iter()
        .any(|s| s.per_service_mean_delay.len() != ns || s.per_edge_mean_utilization.len() != ne)
    {
        return Err(MetricsError::Inconsistent("dimensions"));
    }
    let avg_count = |f: fn(&TrialSummary<T>) -> usize| -> usize {
        let total: usize = all.iter().map(|s| f(s)).sum();
        (total + all.len() / 2) / all.len()
    };
    Ok(TrialSummary {
        policy: first.policy,
        objective: first.objective,
        per_service_mean_delay: (0..ns)
            .map(|k| mean_of(all.iter().filter_map(|s| s.per_service_mean_delay[k])))
            .collect(),
        per_edge_mean_utilization: (0..ne)
            .map(|k| mean_of(all.iter().map(|s| s.per_edge_mean_utilization[k])).unwrap_or_else(T::zero))
            .collect(),
        jain_index: mean_of(all.iter().filter_map(|s| s.jain_index)),
        mean_utilization_pct: mean_of(all.iter().map(|s| s.mean_utilization_pct)).unwrap_or_else(T::zero),
        violation_ticks: avg_count(|s| s.violation_ticks),
        per_service_violation_ticks: (0..ns)
            .map(|k| {
                let total: usize = all.iter().map(|s| s.per_service_violation_ticks[k]).sum();
                (total + all.len() / 2) / all.len()
            })
            .collect(),
        reopt_count: avg_count(|s| s.reopt_count),
        resolve_failures: avg_count(|s| s.resolve_failures),
        ticks: avg_count(|s| s.ticks),
    })
}

fn arm_column(arm: Arm) -> usize {
    Arm::ALL.iter().position(|a| *a == arm).expect("arm is one of four")
}

/// Trials in rows, arms in columns (`Arm::ALL` order); `None` marks an absent arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmTable<T> {
    pub trials: Vec<usize>,
    pub rows: Vec<[Option<T>; 4]>,
    pub average: [Option<T>; 4],
}

impl<T: Real> ArmTable<T> {
    /// Builds the table from `(trial, arm, value)` cells; a later cell for the
    /// same trial and arm replaces an earlier one.
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, Arm, Option<T>)>) -> Self {
        let mut cells: BTreeMap<usize, [Option<T>; 4]> = BTreeMap::new();
        for (trial, arm, value) in entries {
            cells.entry(trial).or_insert([None; 4])[arm_column(arm)] = value;
        }
        let mut average = [None; 4];
        for (col, slot) in average.iter_mut().enumerate() {
            *slot = mean_of(cells.values().filter_map(|row| row[col]));
        }
        ArmTable {
            trials: cells.keys().copied().collect(),
            rows: cells.into_values().collect(),
            average,
        }
    }

    pub fn column(&self, arm: Arm) -> impl Iterator<Item = Option<T>> + '_ {
        let col = arm_column(arm);
        self.rows.iter().map(move |r| r[col])
    }

    pub fn average_of(&self, arm: Arm) -> Option<T> {
        self.average[arm_column(arm)]
    }
}

/// Cross-arm comparison: fairness and utilization tables, plus the runs
/// whose per-tick delays become plot series.
#[derive(Debug, Clone)]
pub struct ComparisonReport<'a, T> {
    pub fairness: ArmTable<T>,
    pub utilization: ArmTable<T>,
    pub series: Vec<&'a TrialRun<T>>,
}

/// Groups runs by arm. Every arm in `required` must have at least one run.
pub fn compare_report<'a, T: Real>(
    runs: &'a [TrialRun<T>],
    required: &[Arm],
) -> Result<ComparisonReport<'a, T>, MetricsError> {
    for arm in required {
        if !runs.iter().any(|r| r.arm == *arm) {
            return Err(MetricsError::MissingArm(*arm));
        }
    }
    if runs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(ComparisonReport {
        fairness: ArmTable::from_entries(runs.iter().map(|r| (r.trial, r.arm, r.summary.jain_index))),
        utilization: ArmTable::from_entries(
            runs.iter()
                .map(|r| (r.trial, r.arm, Some(r.summary.mean_utilization_pct))),
        ),
        series: runs.iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::ServiceDelay;
    use crate::model::{EdgeId, ScenarioConfig, ServiceId, DEFAULT_CAPACITIES, DEFAULT_RESOURCE_DEMANDS};
    use crate::sim::{EdgeTick, ServiceTick};
    use proptest::prelude::*;

    #[test]
    fn jain_equal_shares() {
        assert_eq!(jain_index(&[0.3, 0.3, 0.3, 0.3]).unwrap(), 1.0);
    }

    #[test]
    fn jain_single_user() {
        assert_eq!(jain_index(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 1.0 / 6.0);
    }

    #[test]
    fn jain_errors() {
        assert_eq!(jain_index::<f64>(&[]), Err(MetricsError::Empty));
        assert_eq!(jain_index(&[0.0, 0.0]), Err(MetricsError::AllZero));
    }

    /// Ratios R_s / C_s of the default scenario under the identity placement.
    fn identity_ratios() -> Vec<f64> {
        DEFAULT_RESOURCE_DEMANDS
            .iter()
            .zip(DEFAULT_CAPACITIES)
            .map(|(r, c)| r / c)
            .collect()
    }

    #[test]
    fn jain_on_identity_ratios() {
        // sum = 1 + 1/3 + 6/7 + 1/2 + 5/9 + 7/10; evaluated independently term by term
        let v = identity_ratios();
        let s: f64 = 1.0 + 1.0 / 3.0 + 6.0 / 7.0 + 0.5 + 5.0 / 9.0 + 0.7;
        let q: f64 = 1.0 + 1.0 / 9.0 + 36.0 / 49.0 + 0.25 + 25.0 / 81.0 + 0.49;
        let expected = s * s / (6.0 * q);
        let j = jain_index(&v).unwrap();
        assert!((j - expected).abs() < 1e-12);
        assert!((j - 0.896_611_496_341_999).abs() < 1e-12, "{j}");
    }

    fn identity_tick(time: f64, delay: ServiceDelay<f64>) -> TickRecord<f64> {
        let ratios = identity_ratios();
        TickRecord {
            time,
            per_service: (0..6)
                .map(|s| ServiceTick {
                    service: ServiceId(s),
                    host: EdgeId(s),
                    requesters: 1,
                    avg_delay: delay,
                    threshold: 4.0,
                    reward: None,
                    q_value: None,
                    decrements: 0,
                })
                .collect(),
            per_edge: (0..6)
                .map(|i| EdgeTick {
                    edge: EdgeId(i),
                    hosted: Some(ServiceId(i)),
                    utilization: ratios[i],
                })
                .collect(),
            reoptimized: false,
            resolve_failed: false,
        }
    }

    fn scenario() -> ValidScenario<f64> {
        ScenarioConfig::default().validate().unwrap()
    }

    const STATIC_D: Arm = Arm::new(PolicyKind::Static, ObjectiveKind::Delay);

    #[test]
    fn single_identity_tick() {
        let s = summarize(&[identity_tick(1.0, ServiceDelay::Mean(2.0))], &scenario(), STATIC_D).unwrap();
        assert_eq!(s.per_edge_mean_utilization, identity_ratios());
        let mean: f64 = identity_ratios().iter().sum::<f64>() / 6.0;
        assert!((s.mean_utilization_pct - 100.0 * mean).abs() < 1e-9);
        assert_eq!(s.reopt_count, 0);
        assert_eq!(s.violation_ticks, 0);
    }

    #[test]
    fn constant_ticks_time_average() {
        let ticks: Vec<_> = (1..=7)
            .map(|t| identity_tick(t as f64, ServiceDelay::Mean(2.5)))
            .collect();
        let one = summarize(&ticks[..1], &scenario(), STATIC_D).unwrap();
        let all = summarize(&ticks, &scenario(), STATIC_D).unwrap();
        for (a, b) in one.per_edge_mean_utilization.iter().zip(&all.per_edge_mean_utilization) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((one.jain_index.unwrap() - all.jain_index.unwrap()).abs() < 1e-12);
        assert_eq!(all.per_service_mean_delay, vec![Some(2.5); 6]);
    }

    #[test]
    fn no_demand_ticks_excluded_and_violations_counted() {
        let ticks = vec![
            identity_tick(1.0, ServiceDelay::Mean(2.0)),
            identity_tick(2.0, ServiceDelay::NoDemand),
            identity_tick(3.0, ServiceDelay::Mean(4.0)),
        ];
        let s = summarize(&ticks, &scenario(), STATIC_D).unwrap();
        assert_eq!(s.per_service_mean_delay, vec![Some(3.0); 6]);
        assert_eq!(s.violation_ticks, 1);
        assert_eq!(s.per_service_violation_ticks, vec![1; 6]);
        assert_eq!(
            summarize::<f64>(&[], &scenario(), STATIC_D),
            Err(MetricsError::EmptyInput)
        );
    }

    proptest! {
        #[test]
        fn jain_scale_and_permutation_invariant(
            v in prop::collection::vec(0.0..10.0f64, 1..12).prop_filter("nonzero", |v| v.iter().any(|&x| x > 1e-6)),
            c in 1e-3..1e3f64,
            seed in any::<u64>(),
        ) {
            let j = jain_index(&v).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert!((jain_index(&scaled).unwrap() - j).abs() < 1e-12);
            let mut p = v.clone();
            let n = p.len();
            let mut st = seed | 1;
            for k in (1..n).rev() {
                st ^= st << 13; st ^= st >> 7; st ^= st << 17;
                p.swap(k, (st % (k as u64 + 1)) as usize);
            }
            prop_assert!((jain_index(&p).unwrap() - j).abs() < 1e-12);
            prop_assert!(j >= 1.0 / n as f64 - 1e-12 && j <= 1.0 + 1e-12);
        }
    }
}
