//! Sequential-concessions planning session.
//!
//! A session admits ready tasks, staffs them jointly from the free workers,
//! commits the whole wave, then advances the clock to the next completion and
//! repeats. When the wave cannot be staffed (infeasible) or costs more than
//! the sum of its per-task minima (overrun), the session stops at a
//! [`DecisionPrompt`] and waits for a [`Decision`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bounds::t_min_wave;
use crate::document::canonical_json;
use crate::error::{Error, Result};
use crate::model::{
    validate_project, Hierarchy, PrecedenceSemantics, Project, Task, TaskId, Worker, WorkerId, EPS,
};
use crate::policy::{DecisionMaker, Verdict};
use crate::staffing::{
    c_min_project, demand, solve_joint_staffing, AssignmentMatrix, IdealPoint, Shortfall,
    StaffingResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub semantics: PrecedenceSemantics,
    /// Prompt even when a wave costs exactly its per-task minima.
    pub prompt_on_zero_overrun: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            semantics: PrecedenceSemantics::StartToStart,
            prompt_on_zero_overrun: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrewMember {
    pub worker: WorkerId,
    pub work_type: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningTask {
    pub start: f64,
    pub remaining: f64,
    pub crew: Vec<CrewMember>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadyTask {
    pub id: TaskId,
    pub duration: f64,
    /// Total workers needed across work types.
    pub demand: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum PromptCase {
    /// The free workers cannot staff every ready task.
    Infeasible { shortfalls: Vec<Shortfall> },
    /// The cheapest joint crew costs more than the per-task minima.
    CostOverrun {
        assignment: AssignmentMatrix,
        proposed_cost: f64,
        baseline_cost: f64,
        overrun: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPrompt {
    #[serde(flatten)]
    pub case: PromptCase,
    pub clock: f64,
    pub ready: Vec<ReadyTask>,
    pub running: usize,
    /// Lower bound on the delay a deferral introduces: the shortest ready
    /// task duration.
    pub defer_delay_bound: f64,
}

impl DecisionPrompt {
    pub fn is_infeasible(&self) -> bool {
        matches!(self.case, PromptCase::Infeasible { .. })
    }

    /// Deferring every ready task is only allowed while something runs.
    pub fn can_defer_all(&self) -> bool {
        self.running > 0
    }

    pub fn overrun(&self) -> Option<f64> {
        match &self.case {
            PromptCase::CostOverrun { overrun, .. } => Some(*overrun),
            PromptCase::Infeasible { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    AddWorkers { workers: Vec<Worker> },
    DeferTasks { tasks: Vec<TaskId> },
    AcceptCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concession {
    pub prompt: DecisionPrompt,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StalemateReport {
    pub reason: String,
    pub clock: f64,
    pub committed_cost: f64,
    pub unfinished: Vec<TaskId>,
    pub last_prompt: Option<DecisionPrompt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Advancing,
    AwaitingDecision { prompt: DecisionPrompt },
    Completed,
    Stalemate { report: StalemateReport },
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Advancing => "advancing",
            Phase::AwaitingDecision { .. } => "awaiting_decision",
            Phase::Completed => "completed",
            Phase::Stalemate { .. } => "stalemate",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Phase::Completed | Phase::Stalemate { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledTask {
    pub task: TaskId,
    pub start: f64,
    pub finish: f64,
    pub crew: Vec<CrewMember>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Tasks by start time, ties by id.
    pub hierarchy: Hierarchy,
    pub schedule: Vec<ScheduledTask>,
    pub total_duration: f64,
    pub total_cost: f64,
    pub concession_trace: Vec<Concession>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Started {
        tasks: usize,
        workers: usize,
        t_min_reference: f64,
        c_min_reference: Option<f64>,
    },
    Admitted {
        tasks: Vec<TaskId>,
    },
    Prompted {
        prompt: DecisionPrompt,
    },
    DecisionApplied {
        decision: Decision,
    },
    Committed {
        tasks: Vec<TaskId>,
        assignment: AssignmentMatrix,
        cost: f64,
        overrun: f64,
        auto: bool,
    },
    Advanced {
        step: f64,
        completed: Vec<TaskId>,
        released: Vec<WorkerId>,
    },
    Completed {
        total_duration: f64,
        total_cost: f64,
    },
    Stalemate {
        reason: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Started { .. } => "started",
            EventKind::Admitted { .. } => "admitted",
            EventKind::Prompted { .. } => "prompted",
            EventKind::DecisionApplied { .. } => "decision_applied",
            EventKind::Committed { .. } => "committed",
            EventKind::Advanced { .. } => "advanced",
            EventKind::Completed { .. } => "completed",
            EventKind::Stalemate { .. } => "stalemate",
        }
    }
}

/// One log entry, with a snapshot of the clock, cost and worker counts taken
/// right after the transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub clock: f64,
    pub committed_cost: f64,
    pub free_workers: usize,
    pub occupied_workers: usize,
    pub pool_size: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Stage {
    Admit,
    Solve,
    Advance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Signature {
    ready: BTreeSet<TaskId>,
    pool: Vec<WorkerId>,
}

/// What the decision maker sees besides the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub clock: f64,
    pub committed_cost: f64,
    pub t_star: f64,
    pub c_star: Option<f64>,
}

impl StateSummary {
    pub fn ideal_point(&self) -> Option<IdealPoint> {
        self.c_star.map(|c_star| IdealPoint { t_star: self.t_star, c_star })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DryRun {
    pub projected_t_delta: f64,
    pub projected_c_delta: f64,
    pub next_prompt: Option<DecisionPrompt>,
    pub phase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed { plan: Plan },
    Stalemate { report: StalemateReport },
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionState {
    pub config: SessionConfig,
    /// Includes workers added during the session.
    pub project: Project,
    pub clock: f64,
    pub committed_cost: f64,
    pub pending: BTreeSet<TaskId>,
    pub ready: BTreeSet<TaskId>,
    pub running: BTreeMap<TaskId, RunningTask>,
    pub completed: BTreeSet<TaskId>,
    pub free_workers: BTreeSet<WorkerId>,
    pub phase: Phase,
    pub log: Vec<SessionEvent>,
    pub concession_trace: Vec<Concession>,
    pub finished: BTreeMap<TaskId, ScheduledTask>,
    pub t_min_reference: f64,
    pub c_min_reference: Option<f64>,
    pub workers_added: usize,
    pub plan: Option<Plan>,
    stage: Stage,
    last_infeasible: Option<Signature>,
}

pub fn start_session(project: Project, config: SessionConfig) -> Result<SessionState> {
    SessionState::start(project, config)
}

impl SessionState {
    pub fn start(project: Project, config: SessionConfig) -> Result<Self> {
        let report = validate_project(&project);
        if !report.is_valid() {
            return Err(Error::InvalidProject(report));
        }
        let t_min_reference =
            t_min_wave(&project, PrecedenceSemantics::FinishToStart)?.total_duration;
        let c_min_reference = c_min_project(&project)?.ok().map(|c| c.total);
        let mut state = SessionState {
            config,
            clock: 0.0,
            committed_cost: 0.0,
            pending: project.tasks.iter().map(|t| t.id.clone()).collect(),
            ready: BTreeSet::new(),
            running: BTreeMap::new(),
            completed: BTreeSet::new(),
            free_workers: project.workers.iter().map(|w| w.id.clone()).collect(),
            phase: Phase::Advancing,
            log: Vec::new(),
            concession_trace: Vec::new(),
            finished: BTreeMap::new(),
            t_min_reference,
            c_min_reference,
            workers_added: 0,
            plan: None,
            stage: Stage::Admit,
            last_infeasible: None,
            project,
        };
        state.emit(EventKind::Started {
            tasks: state.project.tasks.len(),
            workers: state.project.workers.len(),
            t_min_reference,
            c_min_reference,
        });
        Ok(state)
    }

    pub fn prompt(&self) -> Option<&DecisionPrompt> {
        match &self.phase {
            Phase::AwaitingDecision { prompt } => Some(prompt),
            _ => None,
        }
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary {
            clock: self.clock,
            committed_cost: self.committed_cost,
            t_star: self.t_min_reference,
            c_star: self.c_min_reference,
        }
    }

    pub fn occupied_workers(&self) -> usize {
        self.running.values().map(|r| r.crew.len()).sum()
    }

    /// SHA-256 of the canonical serialization of the whole state.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = canonical_json(self, false).expect("session state serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn task(&self, id: &TaskId) -> &Task {
        self.project
            .find_task(id)
            .expect("session only tracks ids of project tasks")
    }

    fn emit(&mut self, kind: EventKind) {
        let event = SessionEvent {
            seq: self.log.len() as u64,
            clock: self.clock,
            committed_cost: self.committed_cost,
            free_workers: self.free_workers.len(),
            occupied_workers: self.occupied_workers(),
            pool_size: self.project.workers.len(),
            kind,
        };
        self.log.push(event);
    }

    fn last_event(&self) -> SessionEvent {
        self.log.last().cloned().expect("log is never empty")
    }

    /// Runs one engine transition and returns the event it produced.
    pub fn step(&mut self) -> Result<SessionEvent> {
        match &self.phase {
            Phase::Advancing => {}
            Phase::AwaitingDecision { .. } => {
                return Err(Error::Protocol("a decision is pending".into()))
            }
            Phase::Completed | Phase::Stalemate { .. } => {
                return Err(Error::Protocol("the session has ended".into()))
            }
        }
        if self.pending.is_empty() && self.ready.is_empty() && self.running.is_empty() {
            self.complete();
            return Ok(self.last_event());
        }
        loop {
            match self.stage {
                Stage::Admit => {
                    self.stage = Stage::Solve;
                    let admitted = self.admissible();
                    if !admitted.is_empty() {
                        for id in &admitted {
                            self.pending.remove(id);
                            self.ready.insert(id.clone());
                        }
                        self.emit(EventKind::Admitted { tasks: admitted });
                        return Ok(self.last_event());
                    }
                    if self.running.is_empty() && self.ready.is_empty() {
                        return Err(Error::Invariant(format!(
                            "nothing is ready or running at t={} but {} task(s) remain",
                            self.clock,
                            self.pending.len()
                        )));
                    }
                }
                Stage::Solve => {
                    if self.ready.is_empty() {
                        self.stage = Stage::Advance;
                        continue;
                    }
                    self.resolve()?;
                    return Ok(self.last_event());
                }
                Stage::Advance => {
                    if self.running.is_empty() {
                        self.stage = Stage::Admit;
                        continue;
                    }
                    self.advance_clock();
                    return Ok(self.last_event());
                }
            }
        }
    }

    /// Steps until a decision is needed or the session ends.
    pub fn advance_until_blocked(&mut self) -> Result<()> {
        while matches!(self.phase, Phase::Advancing) {
            self.step()?;
        }
        Ok(())
    }

    fn admissible(&self) -> Vec<TaskId> {
        self.pending
            .iter()
            .filter(|id| {
                self.task(id).predecessors.iter().all(|p| match self.config.semantics {
                    PrecedenceSemantics::FinishToStart => self.completed.contains(p),
                    PrecedenceSemantics::StartToStart => {
                        self.completed.contains(p) || self.running.contains_key(p)
                    }
                })
            })
            .cloned()
            .collect()
    }

    /// Staffs the current ready set; commits, prompts, or stalls.
    fn resolve(&mut self) -> Result<()> {
        let tasks: Vec<&Task> = self.ready.iter().map(|id| self.task(id)).collect();
        let free: Vec<&Worker> = self
            .project
            .workers
            .iter()
            .filter(|w| self.free_workers.contains(&w.id))
            .collect();
        match solve_joint_staffing(&tasks, &free)? {
            StaffingResult::Infeasible { shortfalls } => {
                let sig = Signature {
                    ready: self.ready.clone(),
                    pool: self.project.workers.iter().map(|w| w.id.clone()).collect(),
                };
                if self.last_infeasible.as_ref() == Some(&sig) {
                    self.stall(
                        "staffing is still infeasible with the same ready tasks and worker pool"
                            .into(),
                    );
                    return Ok(());
                }
                self.last_infeasible = Some(sig);
                self.ask(PromptCase::Infeasible { shortfalls });
            }
            StaffingResult::Optimal { assignment, cost, .. } => {
                let pool: Vec<&Worker> = self.project.workers.iter().collect();
                let mut baseline = 0.0;
                for t in &tasks {
                    baseline += solve_joint_staffing(&[t], &pool)?.cost().ok_or_else(|| {
                        Error::Invariant(format!("task {} has no crew in the full pool", t.id))
                    })?;
                }
                let overrun = (cost - baseline).max(0.0);
                if overrun > EPS || self.config.prompt_on_zero_overrun {
                    self.ask(PromptCase::CostOverrun {
                        assignment,
                        proposed_cost: cost,
                        baseline_cost: baseline,
                        overrun,
                    });
                } else {
                    self.commit(assignment, cost, overrun, true);
                }
            }
        }
        Ok(())
    }

    fn ask(&mut self, case: PromptCase) {
        let ready: Vec<ReadyTask> = self
            .ready
            .iter()
            .map(|id| {
                let t = self.task(id);
                ReadyTask {
                    id: id.clone(),
                    duration: t.duration,
                    demand: demand(t).map(|d| d.iter().sum()).unwrap_or(0),
                }
            })
            .collect();
        let defer_delay_bound = ready
            .iter()
            .map(|r| r.duration)
            .fold(f64::INFINITY, f64::min);
        let prompt = DecisionPrompt {
            case,
            clock: self.clock,
            ready,
            running: self.running.len(),
            defer_delay_bound,
        };
        self.phase = Phase::AwaitingDecision { prompt: prompt.clone() };
        self.emit(EventKind::Prompted { prompt });
    }

    fn commit(&mut self, assignment: AssignmentMatrix, cost: f64, overrun: f64, auto: bool) {
        let tasks: Vec<TaskId> = std::mem::take(&mut self.ready).into_iter().collect();
        for id in &tasks {
            let duration = self.task(id).duration;
            let mut crew = Vec::new();
            let mut task_cost = 0.0;
            for e in assignment.for_task(id) {
                let worker = self
                    .project
                    .workers
                    .iter()
                    .find(|w| w.id == e.worker)
                    .expect("assigned worker is in the pool");
                task_cost += worker.rates[e.work_type] * duration;
                self.free_workers.remove(&e.worker);
                crew.push(CrewMember { worker: e.worker.clone(), work_type: e.work_type });
            }
            self.running.insert(
                id.clone(),
                RunningTask { start: self.clock, remaining: duration, crew, cost: task_cost },
            );
        }
        self.committed_cost += cost;
        self.stage = Stage::Advance;
        self.phase = Phase::Advancing;
        self.last_infeasible = None;
        self.emit(EventKind::Committed { tasks, assignment, cost, overrun, auto });
    }

    fn advance_clock(&mut self) {
        let step = self
            .running
            .values()
            .map(|r| r.remaining)
            .fold(f64::INFINITY, f64::min);
        self.clock += step;
        for r in self.running.values_mut() {
            r.remaining -= step;
        }
        let done: Vec<TaskId> = self
            .running
            .iter()
            .filter(|(_, r)| r.remaining <= EPS)
            .map(|(id, _)| id.clone())
            .collect();
        let mut released = Vec::new();
        for id in &done {
            let r = self.running.remove(id).expect("listed as running");
            for m in &r.crew {
                self.free_workers.insert(m.worker.clone());
                released.push(m.worker.clone());
            }
            self.completed.insert(id.clone());
            self.finished.insert(
                id.clone(),
                ScheduledTask {
                    task: id.clone(),
                    start: r.start,
                    finish: self.clock,
                    crew: r.crew,
                    cost: r.cost,
                },
            );
        }
        released.sort();
        self.stage = Stage::Admit;
        self.last_infeasible = None;
        self.emit(EventKind::Advanced { step, completed: done, released });
    }

    fn complete(&mut self) {
        let mut schedule: Vec<ScheduledTask> = self.finished.values().cloned().collect();
        schedule.sort_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.task.cmp(&b.task)));
        let plan = Plan {
            hierarchy: Hierarchy(schedule.iter().map(|s| s.task.clone()).collect()),
            schedule,
            total_duration: self.clock,
            total_cost: self.committed_cost,
            concession_trace: self.concession_trace.clone(),
        };
        self.plan = Some(plan);
        self.phase = Phase::Completed;
        self.emit(EventKind::Completed {
            total_duration: self.clock,
            total_cost: self.committed_cost,
        });
    }

    fn stall(&mut self, reason: String) {
        let last_prompt = self.prompt().cloned().or_else(|| {
            self.concession_trace.last().map(|c| c.prompt.clone())
        });
        let mut unfinished: Vec<TaskId> = self
            .pending
            .iter()
            .chain(self.ready.iter())
            .chain(self.running.keys())
            .cloned()
            .collect();
        unfinished.sort();
        let report = StalemateReport {
            reason: reason.clone(),
            clock: self.clock,
            committed_cost: self.committed_cost,
            unfinished,
            last_prompt,
        };
        self.phase = Phase::Stalemate { report };
        self.emit(EventKind::Stalemate { reason });
    }

    /// Ends a session whose decision maker declines to answer.
    pub fn abstain(&mut self, reason: impl Into<String>) -> Result<()> {
        if self.prompt().is_none() {
            return Err(Error::Protocol("no decision is pending".into()));
        }
        self.stall(reason.into());
        Ok(())
    }

    /// Checks `decision` against the pending prompt without changing state.
    pub fn check_decision(&self, decision: &Decision) -> Result<()> {
        let prompt = self
            .prompt()
            .ok_or_else(|| Error::Protocol("no decision is pending".into()))?;
        match decision {
            Decision::AcceptCost if prompt.is_infeasible() => Err(Error::IllegalDecision(
                "cannot accept cost: the ready tasks cannot be staffed".into(),
            )),
            Decision::AcceptCost => Ok(()),
            Decision::AddWorkers { .. } if !prompt.is_infeasible() => Err(Error::IllegalDecision(
                "workers can only be added when staffing is infeasible".into(),
            )),
            Decision::AddWorkers { workers } => {
                let q = self.project.q();
                let mut ids: BTreeSet<&WorkerId> =
                    self.project.workers.iter().map(|w| &w.id).collect();
                for w in workers {
                    if w.skills.len() != q || w.rates.len() != q {
                        return Err(Error::IllegalDecision(format!(
                            "worker {} must list {q} skills and rates",
                            w.id
                        )));
                    }
                    if w.rates.iter().any(|&c| !c.is_finite() || c < 0.0) {
                        return Err(Error::IllegalDecision(format!(
                            "worker {} has a negative rate",
                            w.id
                        )));
                    }
                    if !ids.insert(&w.id) {
                        return Err(Error::IllegalDecision(format!(
                            "worker id {} is already in use",
                            w.id
                        )));
                    }
                }
                Ok(())
            }
            Decision::DeferTasks { tasks } => {
                if tasks.is_empty() {
                    return Err(Error::IllegalDecision("nothing to defer".into()));
                }
                let set: BTreeSet<&TaskId> = tasks.iter().collect();
                if set.len() != tasks.len() {
                    return Err(Error::IllegalDecision("duplicate task in deferral".into()));
                }
                if let Some(t) = tasks.iter().find(|t| !self.ready.contains(t)) {
                    return Err(Error::IllegalDecision(format!("task {t} is not ready")));
                }
                if set.len() == self.ready.len() && self.running.is_empty() {
                    return Err(Error::IllegalDecision(
                        "cannot defer every ready task while nothing is running".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Applies an answer to the pending prompt and re-solves the wave.
    pub fn apply_decision(&mut self, decision: Decision) -> Result<()> {
        self.check_decision(&decision)?;
        let prompt = self.prompt().cloned().expect("checked above");
        self.concession_trace.push(Concession {
            prompt: prompt.clone(),
            decision: decision.clone(),
        });
        self.phase = Phase::Advancing;
        self.emit(EventKind::DecisionApplied { decision: decision.clone() });
        match decision {
            Decision::AddWorkers { workers } => {
                self.workers_added += workers.len();
                for w in workers {
                    self.free_workers.insert(w.id.clone());
                    self.project.workers.push(w);
                }
                self.resolve()
            }
            Decision::DeferTasks { tasks } => {
                for t in tasks {
                    self.ready.remove(&t);
                    self.pending.insert(t);
                }
                if self.ready.is_empty() {
                    self.stage = Stage::Advance;
                    Ok(())
                } else {
                    self.resolve()
                }
            }
            Decision::AcceptCost => {
                let PromptCase::CostOverrun { assignment, proposed_cost, overrun, .. } = prompt.case
                else {
                    unreachable!("checked above")
                };
                self.commit(assignment, proposed_cost, overrun, false);
                Ok(())
            }
        }
    }

    /// Projects the effect of `decision` up to the next prompt or the end of
    /// the session, leaving `self` untouched.
    pub fn dry_run(&self, decision: &Decision) -> Result<DryRun> {
        let mut copy = self.clone();
        copy.apply_decision(decision.clone())?;
        copy.advance_until_blocked()?;
        Ok(DryRun {
            projected_t_delta: copy.clock - self.clock,
            projected_c_delta: copy.committed_cost - self.committed_cost,
            next_prompt: copy.prompt().cloned(),
            phase: copy.phase.name().to_string(),
        })
    }

    pub fn outcome(&self) -> Option<RunOutcome> {
        match &self.phase {
            Phase::Completed => Some(RunOutcome::Completed {
                plan: self.plan.clone().expect("completed sessions carry a plan"),
            }),
            Phase::Stalemate { report } => Some(RunOutcome::Stalemate { report: report.clone() }),
            _ => None,
        }
    }
}

/// Answers prompts with `dm` until the session ends. Illegal answers and
/// abstentions end the session in stalemate.
pub fn drive(state: &mut SessionState, dm: &mut dyn DecisionMaker) -> Result<()> {
    loop {
        state.advance_until_blocked()?;
        let Some(prompt) = state.prompt().cloned() else {
            return Ok(());
        };
        match dm.decide(&prompt, &state.summary()) {
            Verdict::Decide(d) => match state.apply_decision(d) {
                Ok(()) => {}
                Err(Error::IllegalDecision(why)) => {
                    state.abstain(format!("decision maker gave an illegal decision: {why}"))?
                }
                Err(e) => return Err(e),
            },
            Verdict::Abstain(reason) => state.abstain(reason)?,
        }
    }
}

pub fn run_to_completion(
    project: Project,
    config: SessionConfig,
    dm: &mut dyn DecisionMaker,
) -> Result<RunOutcome> {
    let mut state = SessionState::start(project, config)?;
    drive(&mut state, dm)?;
    Ok(state.outcome().expect("drive stops only at a terminal phase"))
}

/// Rebuilds a session from its inputs and the decisions taken so far.
pub fn replay(project: Project, config: SessionConfig, decisions: &[Decision]) -> Result<SessionState> {
    let mut state = SessionState::start(project, config)?;
    state.advance_until_blocked()?;
    for d in decisions {
        state.apply_decision(d.clone())?;
        state.advance_until_blocked()?;
    }
    Ok(state)
}
