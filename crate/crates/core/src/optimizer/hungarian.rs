//! Rectangular min-cost assignment (shortest augmenting path with potentials).
//!
//! Forbidden pairs are `None`. Rows must not outnumber columns.

use crate::scalar::Real;

/// Minimum total cost of assigning every row to a distinct column, or `None`
/// if no such assignment avoids the forbidden pairs. `cost(r, c)` is queried
/// for `r < rows`, `c < cols`.
pub fn min_cost<T: Real>(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> Option<T>) -> Option<T> {
    solve(rows, cols, cost).map(|(total, _)| total)
}

/// As [`min_cost`], also returning the column chosen for each row.
pub fn solve<T: Real>(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> Option<T>) -> Option<(T, Vec<usize>)> {
    if rows == 0 {
        return Some((T::zero(), Vec::new()));
    }
    if rows > cols {
        return None;
    }
    let inf = T::infinity();
    let c = |r: usize, j: usize| cost(r, j).unwrap_or(inf);

    // 1-based: u over rows, v over columns, column 0 is the virtual root.
    let mut u = vec![T::zero(); rows + 1];
    let mut v = vec![T::zero(); cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for r in 1..=rows {
        owner[0] = r;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(r, &j)| c(r, j))
        .fold(T::zero(), |a, b| a + b);
    Some((total, assignment))
}
