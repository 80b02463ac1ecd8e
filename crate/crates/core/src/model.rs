//! Project, task and worker types, structural validation, hierarchy checks
//! and topology classification.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for every real-valued comparison against zero.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkerId(pub String);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TaskId {
    fn from(s: &str) -> Self {
        TaskId(s.to_string())
    }
}

impl From<&str> for WorkerId {
    fn from(s: &str) -> Self {
        WorkerId(s.to_string())
    }
}

/// A unit of project work with its precedence set, per-work-type volumes and
/// resource needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub predecessors: BTreeSet<TaskId>,
    /// Work volume per work type, in worker-time units.
    pub work: Vec<f64>,
    /// Material resource amounts per resource type. Carried, never optimized.
    pub resources: Vec<u64>,
    pub duration: f64,
    /// Informational only; all computed costs come from worker rates.
    pub declared_cost: Option<f64>,
}

impl Task {
    pub fn new(id: impl Into<String>, duration: f64, work: Vec<f64>) -> Self {
        Task {
            id: TaskId(id.into()),
            predecessors: BTreeSet::new(),
            work,
            resources: Vec::new(),
            duration,
            declared_cost: None,
        }
    }

    pub fn after<I, S>(mut self, preds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.predecessors
            .extend(preds.into_iter().map(|p| TaskId(p.into())));
        self
    }

    pub fn with_resources(mut self, resources: Vec<u64>) -> Self {
        self.resources = resources;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: WorkerId,
    pub skills: Vec<bool>,
    /// Cost per unit time for each work type. Ignored where the skill is absent.
    pub rates: Vec<f64>,
}

impl Worker {
    pub fn new(id: impl Into<String>, skills: Vec<bool>, rates: Vec<f64>) -> Self {
        Worker {
            id: WorkerId(id.into()),
            skills,
            rates,
        }
    }

    /// Worker skilled in every one of `q` work types at a single flat rate.
    pub fn flat(id: impl Into<String>, q: usize, rate: f64) -> Self {
        Worker::new(id, vec![true; q], vec![rate; q])
    }

    pub fn can_do(&self, work_type: usize) -> bool {
        self.skills.get(work_type).copied().unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub work_types: Vec<String>,
    pub resource_types: Vec<String>,
    pub tasks: Vec<Task>,
    pub workers: Vec<Worker>,
    pub budget: Option<f64>,
    pub deadline: Option<f64>,
}

impl Project {
    pub fn new(work_types: Vec<String>) -> Self {
        Project {
            work_types,
            resource_types: Vec::new(),
            tasks: Vec::new(),
            workers: Vec::new(),
            budget: None,
            deadline: None,
        }
    }

    /// Project with work types labelled `S1..Sq`.
    pub fn with_work_types(q: usize) -> Self {
        Project::new((1..=q).map(|i| format!("S{i}")).collect())
    }

    pub fn task(mut self, task: Task) -> Self {
        self.tasks.push(task);
        self
    }

    pub fn worker(mut self, worker: Worker) -> Self {
        self.workers.push(worker);
        self
    }

    pub fn q(&self) -> usize {
        self.work_types.len()
    }

    pub fn find_task(&self, id: &TaskId) -> Option<&Task> {
        self.tasks.iter().find(|t| &t.id == id)
    }

    pub fn task_index(&self) -> HashMap<&TaskId, usize> {
        self.tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (&t.id, i))
            .collect()
    }

    /// Direct successors of every task, keyed by id.
    pub fn successors(&self) -> BTreeMap<&TaskId, BTreeSet<&TaskId>> {
        let mut out: BTreeMap<&TaskId, BTreeSet<&TaskId>> =
            self.tasks.iter().map(|t| (&t.id, BTreeSet::new())).collect();
        for t in &self.tasks {
            for p in &t.predecessors {
                if let Some(s) = out.get_mut(p) {
                    s.insert(&t.id);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyTaskSet,
    NoWorkTypes,
    DuplicateTaskId { id: TaskId },
    DuplicateWorkerId { id: WorkerId },
    DanglingPredecessor { task: TaskId, missing: TaskId },
    SelfDependency { task: TaskId },
    DependencyCycle { tasks: Vec<TaskId> },
    NonPositiveDuration { task: TaskId, duration: f64 },
    NegativeWork { task: TaskId, work_type: usize },
    TaskDimensionMismatch { task: TaskId, field: String, expected: usize, found: usize },
    WorkerDimensionMismatch { worker: WorkerId, field: String, expected: usize, found: usize },
    NegativeRate { worker: WorkerId, work_type: usize },
    NegativeBudget { budget: f64 },
    NonPositiveDeadline { deadline: f64 },
    NegativeDeclaredCost { task: TaskId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTaskSet => write!(f, "project has no tasks"),
            Violation::NoWorkTypes => write!(f, "project declares no work types"),
            Violation::DuplicateTaskId { id } => write!(f, "duplicate task id {id}"),
            Violation::DuplicateWorkerId { id } => write!(f, "duplicate worker id {id}"),
            Violation::DanglingPredecessor { task, missing } => {
                write!(f, "task {task} depends on unknown task {missing}")
            }
            Violation::SelfDependency { task } => write!(f, "task {task} lists itself as predecessor"),
            Violation::DependencyCycle { tasks } => {
                let names: Vec<_> = tasks.iter().map(|t| t.0.as_str()).collect();
                write!(f, "dependency cycle among {}", names.join(", "))
            }
            Violation::NonPositiveDuration { task, duration } => {
                write!(f, "task {task} has non-positive duration {duration}")
            }
            Violation::NegativeWork { task, work_type } => {
                write!(f, "task {task} has negative work for work type {work_type}")
            }
            Violation::TaskDimensionMismatch { task, field, expected, found } => write!(
                f,
                "task {task}: {field} has length {found}, expected {expected}"
            ),
            Violation::WorkerDimensionMismatch { worker, field, expected, found } => write!(
                f,
                "worker {worker}: {field} has length {found}, expected {expected}"
            ),
            Violation::NegativeRate { worker, work_type } => {
                write!(f, "worker {worker} has negative rate for work type {work_type}")
            }
            Violation::NegativeBudget { budget } => write!(f, "budget {budget} is negative"),
            Violation::NonPositiveDeadline { deadline } => {
                write!(f, "deadline {deadline} is not positive")
            }
            Violation::NegativeDeclaredCost { task } => {
                write!(f, "task {task} has a negative declared cost")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_cycle(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::DependencyCycle { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "- {v}")?;
        }
        Ok(())
    }
}

/// Collects every structural problem of `project`. Never aborts early.
pub fn validate_project(project: &Project) -> ValidationReport {
    let mut v = Vec::new();
    let q = project.q();
    let k = project.resource_types.len();

    if project.tasks.is_empty() {
        v.push(Violation::EmptyTaskSet);
    }
    if q == 0 {
        v.push(Violation::NoWorkTypes);
    }
    if let Some(b) = project.budget {
        if b < 0.0 || b.is_nan() {
            v.push(Violation::NegativeBudget { budget: b });
        }
    }
    if let Some(d) = project.deadline {
        if d <= EPS || d.is_nan() {
            v.push(Violation::NonPositiveDeadline { deadline: d });
        }
    }

    let mut seen = BTreeSet::new();
    for t in &project.tasks {
        if !seen.insert(&t.id) {
            v.push(Violation::DuplicateTaskId { id: t.id.clone() });
        }
    }
    let mut seen_w = BTreeSet::new();
    for w in &project.workers {
        if !seen_w.insert(&w.id) {
            v.push(Violation::DuplicateWorkerId { id: w.id.clone() });
        }
    }

    for t in &project.tasks {
        if t.duration.is_nan() || t.duration <= EPS {
            v.push(Violation::NonPositiveDuration {
                task: t.id.clone(),
                duration: t.duration,
            });
        }
        if t.work.len() != q {
            v.push(Violation::TaskDimensionMismatch {
                task: t.id.clone(),
                field: "work".into(),
                expected: q,
                found: t.work.len(),
            });
        }
        if t.resources.len() != k {
            v.push(Violation::TaskDimensionMismatch {
                task: t.id.clone(),
                field: "resources".into(),
                expected: k,
                found: t.resources.len(),
            });
        }
        for (i, &s) in t.work.iter().enumerate() {
            if s < 0.0 || !s.is_finite() {
                v.push(Violation::NegativeWork { task: t.id.clone(), work_type: i });
            }
        }
        if matches!(t.declared_cost, Some(c) if c < 0.0) {
            v.push(Violation::NegativeDeclaredCost { task: t.id.clone() });
        }
        for p in &t.predecessors {
            if p == &t.id {
                v.push(Violation::SelfDependency { task: t.id.clone() });
            } else if !seen.contains(p) {
                v.push(Violation::DanglingPredecessor {
                    task: t.id.clone(),
                    missing: p.clone(),
                });
            }
        }
    }

    for w in &project.workers {
        for (field, len) in [("skills", w.skills.len()), ("rates", w.rates.len())] {
            if len != q {
                v.push(Violation::WorkerDimensionMismatch {
                    worker: w.id.clone(),
                    field: field.into(),
                    expected: q,
                    found: len,
                });
            }
        }
        for (i, &c) in w.rates.iter().enumerate() {
            if c < 0.0 || !c.is_finite() {
                v.push(Violation::NegativeRate { worker: w.id.clone(), work_type: i });
            }
        }
    }

    if let Some(cycle) = find_cycle(project) {
        v.push(Violation::DependencyCycle { tasks: cycle });
    }

    ValidationReport { violations: v }
}

/// Kahn's algorithm over resolvable, non-self edges. Returns the tasks left
/// with positive in-degree (members of or downstream of a cycle), sorted.
fn find_cycle(project: &Project) -> Option<Vec<TaskId>> {
    let index = project.task_index();
    let n = project.tasks.len();
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for (i, t) in project.tasks.iter().enumerate() {
        for p in &t.predecessors {
            if p == &t.id {
                continue;
            }
            if let Some(&j) = index.get(p) {
                succ[j].push(i);
                indeg[i] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut removed = 0;
    while let Some(i) = stack.pop() {
        removed += 1;
        for &s in &succ[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                stack.push(s);
            }
        }
    }
    if removed == n {
        return None;
    }
    let mut left: Vec<TaskId> = (0..n)
        .filter(|&i| indeg[i] > 0)
        .map(|i| project.tasks[i].id.clone())
        .collect();
    left.sort();
    left.dedup();
    Some(left)
}

/// Readiness rule for admitting tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecedenceSemantics {
    /// Ready once every predecessor has completed.
    #[default]
    FinishToStart,
    /// Ready once every predecessor has started.
    StartToStart,
}

impl std::str::FromStr for PrecedenceSemantics {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "finish" | "finish_to_start" | "finish-to-start" => Ok(Self::FinishToStart),
            "start" | "start_to_start" | "start-to-start" => Ok(Self::StartToStart),
            other => Err(format!("unknown precedence semantics `{other}` (expected finish|start)")),
        }
    }
}

/// An ordering of all tasks in which every task follows its predecessors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hierarchy(pub Vec<TaskId>);

/// True iff `ordering` is a permutation of the task set where each task's
/// predecessors occur before it. Unknown ids are an error.
pub fn is_valid_hierarchy(ordering: &Hierarchy, project: &Project) -> Result<bool> {
    let known = project.task_index();
    if let Some(bad) = ordering.0.iter().find(|id| !known.contains_key(id)) {
        return Err(Error::InvalidInput(format!("ordering references unknown task {bad}")));
    }
    if ordering.0.len() != project.tasks.len() {
        return Ok(false);
    }
    let mut placed: BTreeSet<&TaskId> = BTreeSet::new();
    for id in &ordering.0 {
        if placed.contains(id) {
            return Ok(false);
        }
        let task = &project.tasks[known[id]];
        if !task.predecessors.iter().all(|p| placed.contains(p)) {
            return Ok(false);
        }
        placed.insert(id);
    }
    Ok(true)
}

/// Shape of the dependency graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    StraightLine,
    Star,
    Tree,
    General,
}

/// Most specific shape, checked in the order StraightLine, Star, Tree.
pub fn classify_topology(project: &Project) -> Topology {
    let roots: Vec<&Task> = project
        .tasks
        .iter()
        .filter(|t| t.predecessors.is_empty())
        .collect();
    if roots.len() != 1 {
        return Topology::General;
    }
    let root = &roots[0].id;
    let in_tree = project.tasks.iter().all(|t| t.predecessors.len() <= 1);
    if !in_tree {
        return Topology::General;
    }
    let succ = project.successors();
    if succ.values().all(|s| s.len() <= 1) {
        return Topology::StraightLine;
    }
    let star = project
        .tasks
        .iter()
        .filter(|t| &t.id != root)
        .all(|t| t.predecessors.iter().all(|p| p == root));
    if star {
        Topology::Star
    } else {
        Topology::Tree
    }
}
