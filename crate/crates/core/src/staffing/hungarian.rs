//! Rectangular min-cost assignment (Hungarian method with potentials).
//!
//! Rows are assigned to distinct columns; `rows <= cols` is required.
//! Forbidden cells carry `f64::INFINITY`.

/// Returns `(cost, column_of_row)` or `None` when no full row assignment
/// avoids forbidden cells.
pub fn min_cost_assignment(cost: &[Vec<f64>], cols: usize) -> Option<(f64, Vec<usize>)> {
    let n = cost.len();
    if n == 0 {
        return Some((0.0, Vec::new()));
    }
    if n > cols {
        return None;
    }
    let m = cols;
    let inf = f64::INFINITY;
    // 1-based: index 0 is the virtual column/row.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            col_of[p[j] - 1] = j - 1;
        }
    }
    let total = col_of
        .iter()
        .enumerate()
        .map(|(r, &c)| cost[r][c])
        .sum();
    Some((total, col_of))
}
