//! Properties of the exact solver, checked against the brute-force oracle.

use edgeplace::delay::ServiceDelay;
use edgeplace::model::{DemandVector, DEFAULT_CAPACITIES, DEFAULT_RESOURCE_DEMANDS};
use edgeplace::optimizer::{brute_force_solve, solve, Constraint, ObjectiveKind, SolveError};
use edgeplace::{EdgeId, EdgeNode, Placement, PlacementProblem, Point, ServiceId, ServiceSpec};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    resource: Vec<f64>,
    threshold: Vec<f64>,
    capacity: Vec<f64>,
    ue_limit: Vec<u32>,
    demand: Vec<u32>,
    delay: Vec<Vec<f64>>,
}

impl Instance {
    fn problem(&self, objective: ObjectiveKind) -> PlacementProblem {
        let services = self
            .resource
            .iter()
            .zip(&self.threshold)
            .enumerate()
            .map(|(s, (&r, &d))| ServiceSpec {
                id: ServiceId(s),
                resource_demand: r,
                delay_threshold: d,
            })
            .collect();
        let edges = self
            .capacity
            .iter()
            .zip(&self.ue_limit)
            .enumerate()
            .map(|(i, (&c, &n))| EdgeNode {
                id: EdgeId(i),
                position: Point::new(500.0 * i as f64, 0.0),
                capacity: c,
                ue_limit: n,
            })
            .collect();
        let delays = self
            .delay
            .iter()
            .zip(&self.demand)
            .map(|(row, &u)| {
                row.iter()
                    .map(|&d| {
                        if u == 0 {
                            ServiceDelay::NoDemand
                        } else {
                            ServiceDelay::Mean(d)
                        }
                    })
                    .collect()
            })
            .collect();
        PlacementProblem::from_parts(
            services,
            edges,
            DemandVector(self.demand.clone()),
            delays,
            objective,
            0.1,
        )
        .unwrap()
    }
}

/// Either continuous values or values on a coarse grid (which produces ties).
fn value(lo: f64, hi: f64, step: f64) -> BoxedStrategy<f64> {
    let steps = ((hi - lo) / step) as u32;
    prop_oneof![
        (lo..=hi).boxed(),
        (0..=steps).prop_map(move |k| lo + step * k as f64).boxed(),
    ]
    .boxed()
}

/// 6 services and 6 edges around the reference parameter ranges.
fn instance() -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec(value(20.0, 70.0, 10.0), 6),
        prop::collection::vec(value(4.0, 5.5, 0.5), 6),
        prop::collection::vec(value(60.0, 100.0, 10.0), 6),
        prop::collection::vec(5u32..=40, 6),
        prop::collection::vec(prop_oneof![Just(0u32), 0u32..=30], 6),
        prop::collection::vec(prop::collection::vec(value(1.0, 6.0, 0.5), 6), 6),
    )
        .prop_map(|(resource, threshold, capacity, ue_limit, demand, delay)| Instance {
            resource,
            threshold,
            capacity,
            ue_limit,
            demand,
            delay,
        })
}

fn optimum(p: &PlacementProblem) -> Option<(f64, Placement)> {
    match solve(p) {
        Ok(s) => Some((s.objective_value, s.placement)),
        Err(SolveError::Infeasible(_)) => None,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn matches_brute_force(inst in instance()) {
        for objective in ObjectiveKind::ALL {
            let p = inst.problem(objective);
            match (solve(&p), brute_force_solve(&p)) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(&a.placement, &b.placement);
                    prop_assert!((a.objective_value - b.objective_value).abs() <= 1e-9);
                    prop_assert!(a.feasible && a.report.is_feasible());
                    prop_assert!(Constraint::ALL.iter().all(|&c| a.report.passes(c)));
                }
                (Err(SolveError::Infeasible(a)), Err(SolveError::Infeasible(b))) => prop_assert_eq!(a, b),
                (a, b) => prop_assert!(false, "solver {:?} vs oracle {:?}", a.map(|s| s.placement), b.map(|s| s.placement)),
            }
        }
    }

    #[test]
    fn su_optimum_monotone_in_demand(inst in instance(), s in 0usize..6, extra in 1u32..20) {
        let before = optimum(&inst.problem(ObjectiveKind::Utilization));
        let mut more = inst.clone();
        more.demand[s] += extra;
        let after = optimum(&more.problem(ObjectiveKind::Utilization));
        match (before, after) {
            (Some((b, _)), Some((a, _))) => prop_assert!(a >= b - 1e-9, "{a} < {b}"),
            // more demand can only add UE-limit violations
            (None, Some(_)) => prop_assert!(false, "became feasible with more demand"),
            _ => {}
        }
    }

    #[test]
    fn delay_optimum_scales(inst in instance(), c in 0.05..20.0f64) {
        let p = inst.problem(ObjectiveKind::Delay);
        let mut scaled = inst.clone();
        scaled.delay.iter_mut().flatten().for_each(|d| *d *= c);
        scaled.threshold.iter_mut().for_each(|d| *d *= c);
        let q = scaled.problem(ObjectiveKind::Delay);
        match (optimum(&p), optimum(&q)) {
            (Some((v, x)), Some((w, y))) => {
                prop_assert!((w - c * v).abs() <= 1e-9 * (1.0 + w.abs()));
                // each argmin is optimal for the other instance too
                prop_assert!((p.objective_value(&y).unwrap() - v).abs() <= 1e-9 * (1.0 + v.abs()));
                prop_assert!((q.objective_value(&x).unwrap() - w).abs() <= 1e-9 * (1.0 + w.abs()));
                prop_assert!(p.check_feasibility(&y).is_feasible());
            }
            (None, None) => {}
            (a, b) => prop_assert!(false, "feasibility changed under scaling: {:?} vs {:?}", a, b),
        }
    }
}

/// The reference services and edges with a mild, tie-free delay pattern.
fn table2() -> Instance {
    Instance {
        resource: DEFAULT_RESOURCE_DEMANDS.to_vec(),
        threshold: vec![5.5; 6],
        capacity: DEFAULT_CAPACITIES.to_vec(),
        ue_limit: vec![100; 6],
        demand: vec![12, 20, 15, 9, 30, 14],
        delay: (0..6)
            .map(|s| (0..6).map(|i| 2.0 + 0.1 * ((s * 7 + i * 3) % 5) as f64).collect())
            .collect(),
    }
}

#[test]
fn table2_largest_service_avoids_small_edges() {
    for objective in ObjectiveKind::ALL {
        let p = table2().problem(objective);
        let sol = solve(&p).unwrap();
        for (s, e) in sol.placement.iter() {
            assert!(p.services()[s.0].resource_demand <= p.edges()[e.0].capacity);
        }
        let big = sol.placement.host(ServiceId(5)).unwrap();
        assert!(p.edges()[big.0].capacity >= 70.0, "R=70 on edge {big}");
    }
}

#[test]
fn unique_matching_wins_for_every_objective() {
    // capacities equal to a permutation of the demands: only R_s <= C_i pairs
    // along sigma are feasible once every service needs the full edge
    let sigma = [3usize, 0, 5, 1, 4, 2];
    let resource = vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0];
    let mut capacity = vec![0.0; 6];
    for (s, &i) in sigma.iter().enumerate() {
        capacity[i] = resource[s];
    }
    let inst = Instance {
        resource,
        threshold: vec![5.0; 6],
        capacity,
        ue_limit: vec![50; 6],
        demand: vec![5; 6],
        delay: vec![vec![1.0; 6]; 6],
    };
    for objective in ObjectiveKind::ALL {
        let p = inst.problem(objective);
        let b = brute_force_solve(&p).unwrap();
        let s = solve(&p).unwrap();
        let want: Vec<EdgeId> = sigma.iter().map(|&i| EdgeId(i)).collect();
        assert_eq!(b.placement.hosts(), want.as_slice());
        assert_eq!(s.placement, b.placement);
    }
}

#[test]
fn brute_force_examines_all_permutations() {
    let p = table2().problem(ObjectiveKind::Delay);
    assert_eq!(brute_force_solve(&p).unwrap().evaluated, 720);
}

#[test]
fn oversized_service_is_infeasible() {
    let mut inst = table2();
    inst.resource[2] = 150.0;
    for objective in ObjectiveKind::ALL {
        let p = inst.problem(objective);
        for result in [solve(&p), brute_force_solve(&p)] {
            match result {
                Err(SolveError::Infeasible(inf)) => {
                    assert_eq!(inf.constraint, Constraint::ResourceCapacity);
                    assert_eq!(inf.service, Some(ServiceId(2)));
                }
                other => panic!("{other:?}"),
            }
        }
    }
}

#[test]
fn single_pair_is_the_solution() {
    let inst = Instance {
        resource: vec![20.0],
        threshold: vec![5.0],
        capacity: vec![60.0],
        ue_limit: vec![100],
        demand: vec![10],
        delay: vec![vec![2.5]],
    };
    let d = solve(&inst.problem(ObjectiveKind::Delay)).unwrap();
    assert_eq!(d.objective_value, 2.5);
    let su = solve(&inst.problem(ObjectiveKind::Utilization)).unwrap();
    assert!((su.objective_value - 20.0 / 60.0 * 10.1).abs() < 1e-12);
    assert_eq!(su.placement.hosts(), &[EdgeId(0)]);
}
