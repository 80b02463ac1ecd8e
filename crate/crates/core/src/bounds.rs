//! Duration range of a project: the serial upper bound and the wave-based
//! lower estimate, plus a critical-path diagnostic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PrecedenceSemantics, Project, TaskId, EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveEntry {
    pub task: TaskId,
    /// Every task of a wave starts when the wave opens, so this is always 0.
    pub start_offset: f64,
    pub completion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub start_time: f64,
    /// Ordered by completion time, ties by task id.
    pub entries: Vec<WaveEntry>,
    /// Clock advances taken while draining this wave, in order.
    pub advances: Vec<f64>,
}

impl Wave {
    pub fn tasks(&self) -> impl Iterator<Item = &TaskId> {
        self.entries.iter().map(|e| &e.task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSchedule {
    pub waves: Vec<Wave>,
    pub total_duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationRange {
    pub t_min: f64,
    pub t_max: f64,
}

/// Fully serial duration: the sum of all task durations.
pub fn t_max(project: &Project) -> f64 {
    project.tasks.iter().map(|t| t.duration).sum()
}

/// Lower duration estimate assuming unlimited staff.
///
/// Ready tasks are admitted together as a wave. The clock then repeatedly
/// jumps by the smallest remaining duration in the wave until the wave is
/// drained, and only then is the next wave admitted. Under start-to-start
/// semantics, admission also takes tasks whose predecessors are admitted in
/// the same wave.
pub fn t_min_wave(project: &Project, semantics: PrecedenceSemantics) -> Result<WaveSchedule> {
    let n = project.tasks.len();
    let index = project.task_index();
    let preds: Vec<Vec<usize>> = project
        .tasks
        .iter()
        .map(|t| t.predecessors.iter().filter_map(|p| index.get(p).copied()).collect())
        .collect();

    // Iterate tasks in id order so batch reporting is lexicographic.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| project.tasks[a].id.cmp(&project.tasks[b].id));

    let mut pending: BTreeSet<usize> = (0..n).collect();
    let mut completed = vec![false; n];
    let mut clock = 0.0_f64;
    let mut waves = Vec::new();

    while !pending.is_empty() {
        let mut in_wave = vec![false; n];
        let mut admitted = Vec::new();
        loop {
            let before = admitted.len();
            for &i in &order {
                if !pending.contains(&i) || in_wave[i] {
                    continue;
                }
                let ready = preds[i].iter().all(|&p| match semantics {
                    PrecedenceSemantics::FinishToStart => completed[p],
                    PrecedenceSemantics::StartToStart => completed[p] || in_wave[p],
                });
                if ready {
                    in_wave[i] = true;
                    admitted.push(i);
                }
            }
            if semantics == PrecedenceSemantics::FinishToStart || admitted.len() == before {
                break;
            }
        }
        if admitted.is_empty() {
            return Err(Error::Invariant(format!(
                "no task is ready at t={clock} while {} remain",
                pending.len()
            )));
        }
        for i in &admitted {
            pending.remove(i);
        }
        admitted.sort_by(|&a, &b| project.tasks[a].id.cmp(&project.tasks[b].id));

        let start_time = clock;
        let mut active: Vec<(usize, f64)> = admitted
            .iter()
            .map(|&i| (i, project.tasks[i].duration))
            .collect();
        let mut entries = Vec::with_capacity(active.len());
        let mut advances = Vec::new();
        while !active.is_empty() {
            let step = active
                .iter()
                .map(|&(_, r)| r)
                .fold(f64::INFINITY, f64::min);
            clock += step;
            advances.push(step);
            for (_, r) in active.iter_mut() {
                *r -= step;
            }
            active.retain(|&(i, r)| {
                if r <= EPS {
                    completed[i] = true;
                    entries.push(WaveEntry {
                        task: project.tasks[i].id.clone(),
                        start_offset: 0.0,
                        completion: clock,
                    });
                    false
                } else {
                    true
                }
            });
        }
        waves.push(Wave { start_time, entries, advances });
    }

    Ok(WaveSchedule { waves, total_duration: clock })
}

pub fn duration_range(project: &Project, semantics: PrecedenceSemantics) -> Result<DurationRange> {
    Ok(DurationRange {
        t_min: t_min_wave(project, semantics)?.total_duration,
        t_max: t_max(project),
    })
}

/// Longest finish-to-start dependency path. Reported next to the wave
/// estimate; it is not the wave estimate.
pub fn critical_path(project: &Project) -> Result<f64> {
    let index = project.task_index();
    let n = project.tasks.len();
    let mut finish = vec![f64::NAN; n];
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for (i, t) in project.tasks.iter().enumerate() {
        for p in &t.predecessors {
            let j = *index
                .get(p)
                .ok_or_else(|| Error::InvalidInput(format!("unknown predecessor {p}")))?;
            succ[j].push(i);
            indeg[i] += 1;
        }
    }
    let mut earliest = vec![0.0_f64; n];
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = queue.pop() {
        seen += 1;
        finish[i] = earliest[i] + project.tasks[i].duration;
        for &s in &succ[i] {
            earliest[s] = earliest[s].max(finish[i]);
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push(s);
            }
        }
    }
    if seen != n {
        return Err(Error::InvalidInput("dependency cycle".into()));
    }
    Ok(finish.into_iter().fold(0.0, f64::max))
}
