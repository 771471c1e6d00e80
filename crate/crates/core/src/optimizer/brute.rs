use super::{PlacementProblem, PlacementSolution, SolveError};
use crate::model::{EdgeId, Placement};
use crate::scalar::Real;

pub const BRUTE_FORCE_MAX_SERVICES: usize = 8;

/// Beyond this many candidates enumeration is refused even for few services.
const MAX_CANDIDATES: u128 = 50_000_000;

fn candidate_count(services: usize, edges: usize) -> u128 {
    if services > edges {
        return 0;
    }
    ((edges - services + 1)..=edges).map(|k| k as u128).product()
}

/// Enumerates every injective assignment in lexicographic order, keeps those
/// passing [`PlacementProblem::check_feasibility`], and returns the first one
/// with strictly minimal objective.
pub fn brute_force_solve<T: Real>(problem: &PlacementProblem<T>) -> Result<PlacementSolution<T>, SolveError> {
    let (ns, ne) = (problem.service_count(), problem.edge_count());
    if ns > BRUTE_FORCE_MAX_SERVICES || candidate_count(ns, ne) > MAX_CANDIDATES {
        return Err(SolveError::TooLarge {
            services: ns,
            max: BRUTE_FORCE_MAX_SERVICES,
        });
    }

    let mut best: Option<(T, Placement)> = None;
    let mut examined = 0u64;
    let mut hosts = Vec::with_capacity(ns);
    let mut used = vec![false; ne];
    enumerate(ns, &mut used, &mut hosts, &mut |hosts| {
        examined += 1;
        let placement = Placement::new(hosts.to_vec()).expect("enumeration keeps hosts distinct");
        if !problem.check_feasibility(&placement).is_feasible() {
            return;
        }
        let value = problem.objective_value(&placement).expect("ids in range");
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, placement));
        }
    });

    match best {
        Some((_, placement)) => Ok(PlacementSolution::build(problem, placement, examined)?),
        None => Err(SolveError::Infeasible(problem.diagnose())),
    }
}

fn enumerate(services: usize, used: &mut [bool], hosts: &mut Vec<EdgeId>, visit: &mut impl FnMut(&[EdgeId])) {
    if hosts.len() == services {
        visit(hosts);
        return;
    }
    for i in 0..used.len() {
        if !used[i] {
            used[i] = true;
            hosts.push(EdgeId(i));
            enumerate(services, used, hosts, visit);
            hosts.pop();
            used[i] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(candidate_count(6, 6), 720);
        assert_eq!(candidate_count(2, 4), 12);
        assert_eq!(candidate_count(0, 4), 1);
        assert_eq!(candidate_count(5, 4), 0);
    }
}
