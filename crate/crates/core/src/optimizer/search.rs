use super::hungarian;
use super::{PlacementProblem, PlacementSolution, SolveError};
use crate::model::{EdgeId, Placement, ServiceId};
use crate::scalar::{tolerance, Real};

struct Search<'a, T> {
    problem: &'a PlacementProblem<T>,
    /// `cost[s][i]`, `None` where a per-pair constraint fails.
    cost: Vec<Vec<Option<T>>>,
    used: Vec<bool>,
    hosts: Vec<EdgeId>,
    best: Option<(T, Vec<EdgeId>)>,
    evaluated: u64,
}

impl<T: Real> Search<'_, T> {
    /// Exact optimum of placing services `from..` on the unused edges.
    fn remainder_bound(&self, from: usize) -> Option<T> {
        let free: Vec<usize> = (0..self.used.len()).filter(|&i| !self.used[i]).collect();
        let rows = self.cost.len() - from;
        hungarian::min_cost(rows, free.len(), |r, c| self.cost[from + r][free[c]])
    }

    fn visit(&mut self, s: usize, partial: T) {
        if s == self.cost.len() {
            self.evaluated += 1;
            let placement = Placement::new(self.hosts.clone()).expect("search keeps hosts distinct");
            let value = self
                .problem
                .objective_value(&placement)
                .expect("search only uses known ids");
            // Strict improvement keeps the lexicographically first optimum,
            // since leaves are reached in lexicographic order.
            if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
                self.best = Some((value, self.hosts.clone()));
            }
            return;
        }
        for i in 0..self.used.len() {
            if self.used[i] {
                continue;
            }
            let Some(c) = self.cost[s][i] else { continue };
            self.used[i] = true;
            let bound = self.remainder_bound(s + 1).map(|rest| partial + c + rest);
            let promising = match (bound, &self.best) {
                (None, _) => false,
                (Some(_), None) => true,
                (Some(b), Some((best, _))) => b <= *best + tolerance(*best),
            };
            if promising {
                self.hosts.push(EdgeId(i));
                self.visit(s + 1, partial + c);
                self.hosts.pop();
            }
            self.used[i] = false;
        }
    }
}

/// Minimum-objective feasible placement.
///
/// Ties are broken toward the lexicographically smallest host vector
/// (service 0's edge compared first).
pub fn solve<T: Real>(problem: &PlacementProblem<T>) -> Result<PlacementSolution<T>, SolveError> {
    let (ns, ne) = (problem.service_count(), problem.edge_count());
    if ns > ne {
        return Err(SolveError::Infeasible(problem.diagnose()));
    }
    let cost: Vec<Vec<Option<T>>> = (0..ns)
        .map(|s| {
            (0..ne)
                .map(|i| {
                    let (s, i) = (ServiceId(s), EdgeId(i));
                    problem.pair_allowed(s, i).then(|| problem.term(s, i))
                })
                .collect()
        })
        .collect();
    let mut search = Search {
        problem,
        cost,
        used: vec![false; ne],
        hosts: Vec::with_capacity(ns),
        best: None,
        evaluated: 0,
    };
    if search.remainder_bound(0).is_none() {
        return Err(SolveError::Infeasible(problem.diagnose()));
    }
    search.visit(0, T::zero());
    let evaluated = search.evaluated;
    let (_, hosts) = search.best.ok_or_else(|| SolveError::Infeasible(problem.diagnose()))?;
    let placement = Placement::new(hosts).expect("distinct hosts");
    Ok(PlacementSolution::build(problem, placement, evaluated)?)
}
