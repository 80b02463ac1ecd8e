//! Depth-first branch and bound over per-group worker combinations.
//!
//! Exponential in the worst case; used as an independent check of the
//! matching solver and for small instances.

use super::{cost_tolerance, Instance, StaffingResult};

struct Search<'i, 'a> {
    inst: &'i Instance<'a>,
    /// Lower bound on the cost of groups `g..`: cheapest skilled workers per
    /// group, ignoring conflicts between groups.
    suffix_bound: Vec<f64>,
    used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Option<(f64, Vec<(usize, usize)>)>,
    optimal_count: usize,
}

pub(super) fn solve(inst: &Instance<'_>) -> StaffingResult {
    let groups = inst.groups.len();
    let mut suffix_bound = vec![0.0; groups + 1];
    for g in (0..groups).rev() {
        let mut costs: Vec<f64> = (0..inst.workers.len()).filter_map(|w| inst.cell(w, g)).collect();
        costs.sort_by(f64::total_cmp);
        let d = inst.groups[g].demand as usize;
        let own = if costs.len() >= d {
            costs[..d].iter().sum()
        } else {
            f64::INFINITY
        };
        suffix_bound[g] = suffix_bound[g + 1] + own;
    }
    if !suffix_bound[0].is_finite() {
        return StaffingResult::Infeasible { shortfalls: inst.shortfalls() };
    }
    let mut s = Search {
        inst,
        suffix_bound,
        used: vec![false; inst.workers.len()],
        current: Vec::new(),
        best: None,
        optimal_count: 0,
    };
    s.group(0, 0.0);
    match s.best.take() {
        None => StaffingResult::Infeasible { shortfalls: inst.shortfalls() },
        Some((_, cells)) => inst.finish(cells, s.optimal_count > 1),
    }
}

impl Search<'_, '_> {
    fn group(&mut self, g: usize, acc: f64) {
        if g == self.inst.groups.len() {
            self.leaf(acc);
            return;
        }
        if let Some((best, _)) = &self.best {
            if acc + self.suffix_bound[g] > best + cost_tolerance(*best) {
                return;
            }
        }
        let demand = self.inst.groups[g].demand as usize;
        self.choose(g, 0, demand, acc);
    }

    /// Picks `left` more workers for group `g` from index `from` upward.
    fn choose(&mut self, g: usize, from: usize, left: usize, acc: f64) {
        if left == 0 {
            self.group(g + 1, acc);
            return;
        }
        for w in from..self.inst.workers.len() {
            if self.used[w] {
                continue;
            }
            let Some(c) = self.inst.cell(w, g) else { continue };
            self.used[w] = true;
            self.current.push((w, g));
            self.choose(g, w + 1, left - 1, acc + c);
            self.current.pop();
            self.used[w] = false;
        }
    }

    fn leaf(&mut self, acc: f64) {
        let mut cells = self.current.clone();
        cells.sort_unstable();
        match &self.best {
            None => {
                self.best = Some((acc, cells));
                self.optimal_count = 1;
            }
            Some((best, best_cells)) => {
                let tol = cost_tolerance(*best);
                if acc < best - tol {
                    self.best = Some((acc, cells));
                    self.optimal_count = 1;
                } else if acc <= best + tol {
                    self.optimal_count += 1;
                    if cells < *best_cells {
                        let keep = best.min(acc);
                        self.best = Some((keep, cells));
                    }
                }
            }
        }
    }
}
