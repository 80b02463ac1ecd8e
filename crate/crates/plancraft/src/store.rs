//! Append-only session logs.
//!
//! A session log is one JSON record per line:
//! `{"kind":..,"payload":..,"seq":..,"timestamp":..}`. The first record is
//! `session_created`, carrying the project and configuration. Each accepted
//! decision is a `decision` record and a refusal to answer is an `abstain`
//! record. Engine events follow the transition that
//! produced them under their own kind (`admitted`, `committed`, ...), for
//! audit. Replaying the creation and decision records rebuilds the session;
//! the engine events must then match what the replay produced.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use plancraft_core::document::{canonical_json, ProjectDocument};
use plancraft_core::engine::SessionEvent;
use plancraft_core::{Decision, Project, SessionConfig, SessionState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub timestamp: String,
    pub kind: String,
    pub payload: serde_json::Value,
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        let mut line = canonical_json(self, false).expect("log records serialize");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub project_id: String,
    pub config: SessionConfig,
    pub project: ProjectDocument,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub seq: u64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbstainRecord {
    pub seq: u64,
    pub reason: String,
}

pub const CREATED: &str = "session_created";
pub const DECISION: &str = "decision";
pub const ABSTAIN: &str = "abstain";

/// Writer for one session's log. Without a path it only counts records.
#[derive(Debug)]
pub struct SessionLog {
    path: Option<PathBuf>,
    next_seq: u64,
}

impl SessionLog {
    pub fn create(path: Option<PathBuf>) -> Result<Self> {
        if let Some(p) = &path {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            File::create(p).with_context(|| format!("creating {}", p.display()))?;
        }
        Ok(SessionLog { path, next_seq: 0 })
    }

    fn resume(path: PathBuf, next_seq: u64) -> Self {
        SessionLog { path: Some(path), next_seq }
    }

    pub fn append(&mut self, kind: &str, payload: serde_json::Value) -> Result<()> {
        let record = LogRecord {
            seq: self.next_seq,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            kind: kind.to_string(),
            payload,
        };
        self.next_seq += 1;
        if let Some(p) = &self.path {
            let mut f = OpenOptions::new().append(true).open(p)?;
            f.write_all(record.to_line().as_bytes())?;
        }
        Ok(())
    }

    pub fn append_events(&mut self, events: &[SessionEvent]) -> Result<()> {
        for e in events {
            self.append(e.kind.name(), serde_json::to_value(e)?)?;
        }
        Ok(())
    }
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("log line {} is malformed", i + 1))
        })
        .collect()
}

pub struct Restored {
    pub created: SessionCreated,
    pub state: SessionState,
    pub decisions: Vec<Decision>,
    pub abstained: bool,
    pub log: SessionLog,
}

/// Rebuilds a session from its log file and checks the recorded engine
/// events against the replay.
pub fn restore(path: &Path) -> Result<Restored> {
    let text = fs::read_to_string(path)?;
    let records = parse_log(&text)?;
    let first = records.first().ok_or_else(|| anyhow!("empty session log"))?;
    if first.kind != CREATED {
        bail!("session log must start with {CREATED}");
    }
    let created: SessionCreated = serde_json::from_value(first.payload.clone())?;
    let project = Project::try_from(created.project.clone())?;
    let mut state = SessionState::start(project, created.config)?;
    state.advance_until_blocked()?;
    let mut decisions = Vec::new();
    let mut abstained = false;
    let mut recorded_events = Vec::new();
    for r in &records[1..] {
        if r.kind == DECISION {
            if abstained {
                bail!("decision recorded after the session was abandoned");
            }
            let d: DecisionRecord = serde_json::from_value(r.payload.clone())?;
            if d.seq != decisions.len() as u64 + 1 {
                bail!("decision records out of order at seq {}", d.seq);
            }
            state.apply_decision(d.decision.clone())?;
            state.advance_until_blocked()?;
            decisions.push(d.decision);
        } else if r.kind == ABSTAIN {
            let a: AbstainRecord = serde_json::from_value(r.payload.clone())?;
            if abstained || a.seq != decisions.len() as u64 + 1 {
                bail!("abstain record out of order at seq {}", a.seq);
            }
            state.abstain(a.reason)?;
            abstained = true;
        } else {
            recorded_events.push(serde_json::from_value::<SessionEvent>(r.payload.clone())?);
        }
    }
    let canonical = |events: &[SessionEvent]| canonical_json(events, false);
    if canonical(&recorded_events)? != canonical(&state.log)? {
        bail!(
            "replayed {} engine events but the log records {}",
            state.log.len(),
            recorded_events.len()
        );
    }
    let next = records.last().map_or(0, |r| r.seq + 1);
    Ok(Restored {
        created,
        state,
        decisions,
        abstained,
        log: SessionLog::resume(path.to_path_buf(), next),
    })
}
