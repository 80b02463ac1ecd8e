//! Response bodies shared by the CLI and the service.

use plancraft_core::bounds::{critical_path, t_max, t_min_wave, Wave};
use plancraft_core::engine::{Concession, RunningTask, ScheduledTask};
use plancraft_core::staffing::{c_min_project, InfeasibilityReport, IdealPoint};
use plancraft_core::{
    classify_topology, validate_project, Hierarchy, PrecedenceSemantics, Project, Result,
    SessionState, TaskId, Topology, Violation, WorkerId,
};
use plancraft_core::engine::{Phase, RunOutcome, StalemateReport};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Serialize)]
pub struct ValidationView {
    pub valid: bool,
    pub topology: Option<Topology>,
    pub violations: Vec<Violation>,
}

pub fn validation_view(project: &Project) -> ValidationView {
    let report = validate_project(project);
    ValidationView {
        valid: report.is_valid(),
        topology: report.is_valid().then(|| classify_topology(project)),
        violations: report.violations,
    }
}

#[derive(Debug, Serialize)]
pub struct BoundsView {
    pub semantics: PrecedenceSemantics,
    pub t_min: f64,
    pub t_max: f64,
    pub critical_path: f64,
    pub waves: Vec<Wave>,
}

pub fn bounds_view(project: &Project, semantics: PrecedenceSemantics) -> Result<BoundsView> {
    let schedule = t_min_wave(project, semantics)?;
    Ok(BoundsView {
        semantics,
        t_min: schedule.total_duration,
        t_max: t_max(project),
        critical_path: critical_path(project)?,
        waves: schedule.waves,
    })
}

#[derive(Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IdealView {
    Ideal {
        semantics: PrecedenceSemantics,
        t_star: f64,
        c_star: f64,
        per_task_cost: BTreeMap<TaskId, f64>,
    },
    Infeasible { report: InfeasibilityReport },
}

pub fn ideal_view(project: &Project, semantics: PrecedenceSemantics) -> Result<IdealView> {
    Ok(match c_min_project(project)? {
        Err(report) => IdealView::Infeasible { report },
        Ok(cost) => {
            let point = IdealPoint {
                t_star: t_min_wave(project, semantics)?.total_duration,
                c_star: cost.total,
            };
            IdealView::Ideal {
                semantics,
                t_star: point.t_star,
                c_star: point.c_star,
                per_task_cost: cost.per_task,
            }
        }
    })
}

/// Short result of a planning run.
#[derive(Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunSummary {
    Completed {
        total_duration: f64,
        total_cost: f64,
        hierarchy: Hierarchy,
        concessions: usize,
    },
    Stalemate { report: StalemateReport },
}

impl From<&RunOutcome> for RunSummary {
    fn from(o: &RunOutcome) -> Self {
        match o {
            RunOutcome::Completed { plan } => RunSummary::Completed {
                total_duration: plan.total_duration,
                total_cost: plan.total_cost,
                hierarchy: plan.hierarchy.clone(),
                concessions: plan.concession_trace.len(),
            },
            RunOutcome::Stalemate { report } => RunSummary::Stalemate { report: report.clone() },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TaskStates {
    pub pending: BTreeSet<TaskId>,
    pub ready: BTreeSet<TaskId>,
    pub running: BTreeMap<TaskId, RunningTask>,
    pub completed: BTreeSet<TaskId>,
}

/// Everything a client needs to render a session.
#[derive(Debug, Serialize)]
pub struct SessionView {
    pub id: String,
    pub project_id: String,
    pub next_seq: u64,
    pub phase: Phase,
    pub clock: f64,
    pub committed_cost: f64,
    pub t_star: f64,
    pub c_star: Option<f64>,
    pub tasks: TaskStates,
    pub free_workers: BTreeSet<WorkerId>,
    pub occupied_workers: BTreeSet<WorkerId>,
    pub pool_size: usize,
    pub schedule: Vec<ScheduledTask>,
    pub concession_trace: Vec<Concession>,
    pub events: usize,
    pub fingerprint: String,
}

pub fn session_view(id: &str, project_id: &str, next_seq: u64, s: &SessionState) -> SessionView {
    let summary = s.summary();
    let mut schedule: Vec<ScheduledTask> = s.finished.values().cloned().collect();
    schedule.sort_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.task.cmp(&b.task)));
    SessionView {
        id: id.to_string(),
        project_id: project_id.to_string(),
        next_seq,
        phase: s.phase.clone(),
        clock: s.clock,
        committed_cost: s.committed_cost,
        t_star: summary.t_star,
        c_star: summary.c_star,
        tasks: TaskStates {
            pending: s.pending.clone(),
            ready: s.ready.clone(),
            running: s.running.clone(),
            completed: s.completed.clone(),
        },
        free_workers: s.free_workers.clone(),
        occupied_workers: s
            .running
            .values()
            .flat_map(|r| r.crew.iter().map(|m| m.worker.clone()))
            .collect(),
        pool_size: s.project.workers.len(),
        schedule,
        concession_trace: s.concession_trace.clone(),
        events: s.log.len(),
        fingerprint: s.fingerprint(),
    }
}
