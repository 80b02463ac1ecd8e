//! Worker demand per task, exact minimum-cost crew selection for one task or
//! a set of simultaneously starting tasks, project minimum cost and the
//! ideal point.
//!
//! Every (task, work type) pair needs exactly `chi(work, duration)` workers
//! skilled in that type, each worker takes at most one slot overall, and a
//! worker on task `i` costs `rate * duration_i`. The default solver expands
//! demands into unit slots and solves a rectangular assignment problem; a
//! depth-first branch-and-bound solver gives the same answers and is kept as
//! an independent check.

mod bnb;
pub mod hungarian;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::t_min_wave;
use crate::error::{Error, Result};
use crate::model::{PrecedenceSemantics, Project, Task, TaskId, Worker, WorkerId, EPS};

/// Number of workers needed to perform `work` units within `duration`:
/// `ceil(work / duration)`, with exact multiples (to 1e-9) returning the
/// quotient itself.
pub fn chi(work: f64, duration: f64) -> Result<u32> {
    if !duration.is_finite() || duration <= 0.0 {
        return Err(Error::InvalidInput(format!("duration must be positive, got {duration}")));
    }
    if !work.is_finite() || work < 0.0 {
        return Err(Error::InvalidInput(format!("work must be non-negative, got {work}")));
    }
    if work <= EPS {
        return Ok(0);
    }
    let ratio = work / duration;
    let nearest = ratio.round();
    let n = if nearest >= 1.0 && (nearest * duration - work).abs() <= EPS {
        nearest
    } else {
        ratio.ceil()
    };
    if n > u32::MAX as f64 {
        return Err(Error::InvalidInput(format!("demand {n} is out of range")));
    }
    Ok(n as u32)
}

/// Demand of every work type for `task`.
pub fn demand(task: &Task) -> Result<Vec<u32>> {
    task.work.iter().map(|&s| chi(s, task.duration)).collect()
}

/// One cell of the Boolean assignment: `worker` does `work_type` on `task`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StaffingEntry {
    pub worker: WorkerId,
    pub task: TaskId,
    pub work_type: usize,
}

/// Sorted list of assigned cells.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssignmentMatrix(pub Vec<StaffingEntry>);

impl AssignmentMatrix {
    pub fn entries(&self) -> &[StaffingEntry] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn workers(&self) -> BTreeSet<&WorkerId> {
        self.0.iter().map(|e| &e.worker).collect()
    }

    pub fn for_task<'a>(&'a self, task: &'a TaskId) -> impl Iterator<Item = &'a StaffingEntry> {
        self.0.iter().filter(move |e| &e.task == task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub task: TaskId,
    pub work_type: usize,
    pub demand: u32,
    pub skilled_available: usize,
    pub shortfall: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum StaffingResult {
    Infeasible {
        shortfalls: Vec<Shortfall>,
    },
    Optimal {
        assignment: AssignmentMatrix,
        cost: f64,
        /// Other assignments reach the same cost.
        multiple_optima: bool,
    },
}

impl StaffingResult {
    pub fn cost(&self) -> Option<f64> {
        match self {
            StaffingResult::Optimal { cost, .. } => Some(*cost),
            StaffingResult::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, StaffingResult::Optimal { .. })
    }

    pub fn assignment(&self) -> Option<&AssignmentMatrix> {
        match self {
            StaffingResult::Optimal { assignment, .. } => Some(assignment),
            StaffingResult::Infeasible { .. } => None,
        }
    }

    pub fn total_shortfall(&self) -> u32 {
        match self {
            StaffingResult::Infeasible { shortfalls } => shortfalls.iter().map(|s| s.shortfall).sum(),
            StaffingResult::Optimal { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Matching,
    BranchAndBound,
}

#[derive(Debug, Clone, Copy)]
struct Group {
    task: usize,
    work_type: usize,
    demand: u32,
}

/// A staffing problem with tasks sorted by id and workers sorted by id, so
/// index order is the tie-breaking order.
struct Instance<'a> {
    tasks: Vec<&'a Task>,
    workers: Vec<&'a Worker>,
    groups: Vec<Group>,
}

impl<'a> Instance<'a> {
    fn new(tasks: &[&'a Task], workers: &[&'a Worker]) -> Result<Self> {
        let mut tasks = tasks.to_vec();
        tasks.sort_by(|a, b| a.id.cmp(&b.id));
        if tasks.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidInput("duplicate task in staffing problem".into()));
        }
        let mut workers = workers.to_vec();
        workers.sort_by(|a, b| a.id.cmp(&b.id));
        if workers.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidInput("duplicate worker in staffing problem".into()));
        }
        let q = tasks.first().map(|t| t.work.len());
        if let Some(q) = q {
            if let Some(t) = tasks.iter().find(|t| t.work.len() != q) {
                return Err(Error::InvalidInput(format!(
                    "task {} has {} work types, expected {q}",
                    t.id,
                    t.work.len()
                )));
            }
            if let Some(w) = workers
                .iter()
                .find(|w| w.skills.len() != q || w.rates.len() != q)
            {
                return Err(Error::InvalidInput(format!(
                    "worker {} does not match the {q} work types of the tasks",
                    w.id
                )));
            }
        }
        let mut groups = Vec::new();
        for (ti, t) in tasks.iter().enumerate() {
            for (q, &d) in demand(t)?.iter().enumerate() {
                if d > 0 {
                    groups.push(Group { task: ti, work_type: q, demand: d });
                }
            }
        }
        Ok(Instance { tasks, workers, groups })
    }

    fn total_demand(&self) -> usize {
        self.groups.iter().map(|g| g.demand as usize).sum()
    }

    /// Cost of worker `w` filling one slot of group `g`, if skilled.
    fn cell(&self, w: usize, g: usize) -> Option<f64> {
        let grp = self.groups[g];
        let worker = self.workers[w];
        worker
            .can_do(grp.work_type)
            .then(|| worker.rates[grp.work_type] * self.tasks[grp.task].duration)
    }

    fn entry(&self, w: usize, g: usize) -> StaffingEntry {
        let grp = self.groups[g];
        StaffingEntry {
            worker: self.workers[w].id.clone(),
            task: self.tasks[grp.task].id.clone(),
            work_type: grp.work_type,
        }
    }

    /// Builds the sorted assignment and its cost, summed in entry order so
    /// both solvers report bit-identical totals.
    fn finish(&self, mut cells: Vec<(usize, usize)>, multiple_optima: bool) -> StaffingResult {
        cells.sort_unstable();
        let cost = cells
            .iter()
            .map(|&(w, g)| self.cell(w, g).expect("assigned cell must be skilled"))
            .sum();
        let assignment = AssignmentMatrix(cells.iter().map(|&(w, g)| self.entry(w, g)).collect());
        StaffingResult::Optimal { assignment, cost, multiple_optima }
    }

    /// Maximum-cardinality slot filling (augmenting paths). Returns the
    /// number of filled slots per group.
    fn max_fill(&self) -> Vec<u32> {
        let slots: Vec<usize> = self
            .groups
            .iter()
            .enumerate()
            .flat_map(|(g, grp)| std::iter::repeat_n(g, grp.demand as usize))
            .collect();
        let mut owner: Vec<Option<usize>> = vec![None; self.workers.len()];
        fn augment(
            inst: &Instance<'_>,
            slots: &[usize],
            s: usize,
            seen: &mut [bool],
            owner: &mut [Option<usize>],
        ) -> bool {
            for w in 0..inst.workers.len() {
                if seen[w] || inst.cell(w, slots[s]).is_none() {
                    continue;
                }
                seen[w] = true;
                if owner[w].is_none_or(|o| augment(inst, slots, o, seen, owner)) {
                    owner[w] = Some(s);
                    return true;
                }
            }
            false
        }
        for s in 0..slots.len() {
            let mut seen = vec![false; self.workers.len()];
            augment(self, &slots, s, &mut seen, &mut owner);
        }
        let mut filled = vec![0u32; self.groups.len()];
        for s in owner.into_iter().flatten() {
            filled[slots[s]] += 1;
        }
        filled
    }

    fn shortfalls(&self) -> Vec<Shortfall> {
        let filled = self.max_fill();
        self.groups
            .iter()
            .zip(filled)
            .filter(|(g, f)| *f < g.demand)
            .map(|(g, f)| Shortfall {
                task: self.tasks[g.task].id.clone(),
                work_type: g.work_type,
                demand: g.demand,
                skilled_available: self.workers.iter().filter(|w| w.can_do(g.work_type)).count(),
                shortfall: g.demand - f,
            })
            .collect()
    }

    /// Optimum over `remaining` demands using only `allowed` workers, with
    /// `forbidden` (worker, group) cells excluded.
    fn optimum(
        &self,
        remaining: &[u32],
        allowed: &[bool],
        forbidden: Option<(usize, usize)>,
    ) -> Option<(f64, Vec<(usize, usize)>)> {
        let cols: Vec<usize> = (0..self.workers.len()).filter(|&w| allowed[w]).collect();
        let rows: Vec<usize> = remaining
            .iter()
            .enumerate()
            .flat_map(|(g, &d)| std::iter::repeat_n(g, d as usize))
            .collect();
        let matrix: Vec<Vec<f64>> = rows
            .iter()
            .map(|&g| {
                cols.iter()
                    .map(|&w| {
                        if forbidden == Some((w, g)) {
                            f64::INFINITY
                        } else {
                            self.cell(w, g).unwrap_or(f64::INFINITY)
                        }
                    })
                    .collect()
            })
            .collect();
        let (cost, col_of) = hungarian::min_cost_assignment(&matrix, cols.len())?;
        let cells = rows.iter().zip(col_of).map(|(&g, c)| (cols[c], g)).collect();
        Some((cost, cells))
    }

    fn solve_matching(&self) -> StaffingResult {
        if self.groups.is_empty() {
            return self.finish(Vec::new(), false);
        }
        let demands: Vec<u32> = self.groups.iter().map(|g| g.demand).collect();
        let everyone = vec![true; self.workers.len()];
        let Some((best, _)) = self.optimum(&demands, &everyone, None) else {
            return StaffingResult::Infeasible { shortfalls: self.shortfalls() };
        };
        let tol = cost_tolerance(best);

        // Walk (worker, group) pairs in ascending order, keeping a pair iff
        // some optimal assignment extends the pairs kept so far with it.
        // Pairs skipped here belong to no optimum extending the kept prefix.
        let mut remaining = demands.clone();
        let mut allowed = everyone.clone();
        let mut fixed_cost = 0.0;
        let mut chosen = Vec::new();
        let mut left = self.total_demand();
        for w in 0..self.workers.len() {
            if left == 0 {
                break;
            }
            allowed[w] = false;
            for g in 0..self.groups.len() {
                let Some(c) = self.cell(w, g) else { continue };
                if remaining[g] == 0 {
                    continue;
                }
                remaining[g] -= 1;
                let ok = self
                    .optimum(&remaining, &allowed, None)
                    .is_some_and(|(rest, _)| fixed_cost + c + rest <= best + tol);
                if ok {
                    fixed_cost += c;
                    chosen.push((w, g));
                    left -= 1;
                    break;
                }
                remaining[g] += 1;
            }
        }
        debug_assert_eq!(left, 0, "lexicographic walk must complete an optimum");

        let multiple = chosen.iter().any(|&cell| {
            self.optimum(&demands, &everyone, Some(cell))
                .is_some_and(|(alt, _)| alt <= best + tol)
        });
        self.finish(chosen, multiple)
    }
}

fn cost_tolerance(cost: f64) -> f64 {
    EPS * cost.abs().max(1.0)
}

/// Minimum-cost crew for a single task drawn from `workers`.
pub fn solve_task_staffing(task: &Task, workers: &[Worker]) -> Result<StaffingResult> {
    let refs: Vec<&Worker> = workers.iter().collect();
    solve_joint_staffing(&[task], &refs)
}

/// Minimum-cost crews for all `tasks` at once; each worker serves at most
/// one (task, work type) slot. Among optimal assignments, the
/// lexicographically smallest sorted entry list is returned.
pub fn solve_joint_staffing(tasks: &[&Task], workers: &[&Worker]) -> Result<StaffingResult> {
    solve_joint_staffing_with(SolverMethod::Matching, tasks, workers)
}

pub fn solve_joint_staffing_with(
    method: SolverMethod,
    tasks: &[&Task],
    workers: &[&Worker],
) -> Result<StaffingResult> {
    let inst = Instance::new(tasks, workers)?;
    Ok(match method {
        SolverMethod::Matching => inst.solve_matching(),
        SolverMethod::BranchAndBound => bnb::solve(&inst),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskShortfall {
    pub task: TaskId,
    pub shortfalls: Vec<Shortfall>,
}

/// Tasks that cannot be staffed even from the full worker pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub tasks: Vec<TaskShortfall>,
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "not enough skilled workers for {} task(s):", self.tasks.len())?;
        for t in &self.tasks {
            for s in &t.shortfalls {
                writeln!(
                    f,
                    "  {}: work type {} needs {} worker(s), {} skilled available, short by {}",
                    t.task, s.work_type, s.demand, s.skilled_available, s.shortfall
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectCost {
    pub total: f64,
    pub per_task: BTreeMap<TaskId, f64>,
}

/// Sum over tasks of each task's minimum crew cost against the whole pool.
pub fn c_min_project(project: &Project) -> Result<std::result::Result<ProjectCost, InfeasibilityReport>> {
    let workers: Vec<&Worker> = project.workers.iter().collect();
    let mut per_task = BTreeMap::new();
    let mut failing = Vec::new();
    for task in &project.tasks {
        match solve_joint_staffing(&[task], &workers)? {
            StaffingResult::Optimal { cost, .. } => {
                per_task.insert(task.id.clone(), cost);
            }
            StaffingResult::Infeasible { shortfalls } => failing.push(TaskShortfall {
                task: task.id.clone(),
                shortfalls,
            }),
        }
    }
    if !failing.is_empty() {
        failing.sort_by(|a, b| a.task.cmp(&b.task));
        return Ok(Err(InfeasibilityReport { tasks: failing }));
    }
    // Summed in task-id order for a stable total.
    let total = per_task.values().sum();
    Ok(Ok(ProjectCost { total, per_task }))
}

/// The pair (minimum duration estimate, minimum cost), each computed on its
/// own and generally not reachable by one schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint {
    pub t_star: f64,
    pub c_star: f64,
}

pub fn ideal_point(project: &Project, semantics: PrecedenceSemantics) -> Result<IdealPoint> {
    let cost = c_min_project(project)?.map_err(Error::Infeasible)?;
    let t = t_min_wave(project, semantics)?;
    Ok(IdealPoint { t_star: t.total_duration, c_star: cost.total })
}
