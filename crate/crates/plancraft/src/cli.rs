//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the project is invalid, infeasible or a
//! planning run stalls, 2 on usage errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use plancraft_core::document::{canonical_json, plan_document, schedule_csv, ProjectDocument};
use plancraft_core::engine::{DecisionPrompt, PromptCase, StateSummary};
use plancraft_core::policy::ExternalPolicy;
use plancraft_core::{
    drive, Decision, DecisionMaker, Policy, PrecedenceSemantics, Project,
    RunOutcome, SessionConfig, SessionState,
};
use serde::Serialize;

use crate::views::{bounds_view, ideal_view, validation_view, IdealView, RunSummary};

#[derive(Debug, Parser)]
#[command(name = "plancraft", version, about = "Plan skilled-crew projects by sequential concessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a project document and report every violation.
    Validate { file: PathBuf },
    /// Minimum and maximum project duration plus the critical path.
    Bounds {
        file: PathBuf,
        #[arg(long, default_value = "finish")]
        semantics: PrecedenceSemantics,
    },
    /// The ideal point: minimum duration and minimum staffing cost.
    Ideal {
        file: PathBuf,
        #[arg(long, default_value = "finish")]
        semantics: PrecedenceSemantics,
    },
    /// Build a task hierarchy, answering prompts with a policy.
    Plan {
        file: PathBuf,
        /// always-accept, budget:<real>, deadline:<real> or external
        #[arg(long)]
        policy: Policy,
        /// Write the concession trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the plan document here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the schedule as CSV here.
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Readiness rule used while planning.
        #[arg(long, default_value = "start")]
        semantics: PrecedenceSemantics,
        /// Prompt even when a wave costs exactly its per-task minima.
        #[arg(long)]
        prompt_on_zero_overrun: bool,
        /// Seconds to wait for each external decision.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, env = "PLANCRAFT_PORT", default_value_t = 8080)]
        port: u16,
        /// Persist projects and session logs here; in-memory when unset.
        #[arg(long, env = "PLANCRAFT_DATA_DIR")]
        data_dir: Option<PathBuf>,
    },
}

/// Runs the CLI with the given arguments and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Validate { file } => {
            let project = read_project(&file)?;
            let view = validation_view(&project);
            emit(out, &view)?;
            if !view.valid {
                writeln!(err, "{}", plancraft_core::validate_project(&project))?;
            }
            Ok(if view.valid { 0 } else { 1 })
        }
        Command::Bounds { file, semantics } => {
            let Some(project) = load_valid(&file, err)? else { return Ok(1) };
            emit(out, &bounds_view(&project, semantics)?)?;
            Ok(0)
        }
        Command::Ideal { file, semantics } => {
            let Some(project) = load_valid(&file, err)? else { return Ok(1) };
            let view = ideal_view(&project, semantics)?;
            emit(out, &view)?;
            if let IdealView::Infeasible { report } = &view {
                write!(err, "{report}")?;
                return Ok(1);
            }
            Ok(0)
        }
        Command::Plan {
            file,
            policy,
            trace,
            out: plan_out,
            schedule,
            semantics,
            prompt_on_zero_overrun,
            timeout,
        } => {
            let Some(project) = load_valid(&file, err)? else { return Ok(1) };
            let config = SessionConfig { semantics, prompt_on_zero_overrun };
            let mut state = SessionState::start(project, config)?;
            match policy {
                Policy::External => drive_external(&mut state, out, timeout)?,
                mut other => drive(&mut state, &mut other)?,
            }
            let outcome = state.outcome().expect("drive ends in a terminal phase");
            if let Some(path) = &trace {
                write_file(path, &canonical_json(&state.concession_trace, true)?)?;
            }
            match &outcome {
                RunOutcome::Completed { plan } => {
                    if let Some(path) = &plan_out {
                        write_file(path, &plan_document(plan)?)?;
                    }
                    if let Some(path) = &schedule {
                        write_file(path, &schedule_csv(plan, &state.project)?)?;
                    }
                }
                RunOutcome::Stalemate { report } => {
                    writeln!(err, "stalemate: {}", report.reason)?;
                    if let Some(prompt) = &report.last_prompt {
                        describe_prompt(err, prompt)?;
                    }
                }
            }
            emit(out, &RunSummary::from(&outcome))?;
            Ok(match outcome {
                RunOutcome::Completed { .. } => 0,
                RunOutcome::Stalemate { .. } => 1,
            })
        }
        Command::Serve { port, data_dir } => {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::service::serve(port, data_dir))?;
            Ok(0)
        }
    }
}

fn read_project(file: &Path) -> anyhow::Result<Project> {
    let bytes = fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    let doc: ProjectDocument = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing {}", file.display()))?;
    Ok(Project::try_from(doc)?)
}

/// Loads a project, printing the validation report and returning `None`
/// when it is invalid.
fn load_valid(file: &Path, err: &mut dyn Write) -> anyhow::Result<Option<Project>> {
    let project = read_project(file)?;
    let report = plancraft_core::validate_project(&project);
    if !report.is_valid() {
        writeln!(err, "invalid project:\n{report}")?;
        return Ok(None);
    }
    Ok(Some(project))
}

fn emit<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    out.write_all(canonical_json(value, true)?.as_bytes())?;
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn describe_prompt(err: &mut dyn Write, prompt: &DecisionPrompt) -> io::Result<()> {
    match &prompt.case {
        PromptCase::Infeasible { shortfalls } => {
            for s in shortfalls {
                writeln!(
                    err,
                    "  task {} work type {}: needs {}, {} skilled available, short by {}",
                    s.task, s.work_type, s.demand, s.skilled_available, s.shortfall
                )?;
            }
        }
        PromptCase::CostOverrun { overrun, .. } => {
            writeln!(err, "  pending cost overrun {overrun:.9}")?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ExternalPrompt<'a> {
    prompt: &'a DecisionPrompt,
    summary: &'a StateSummary,
}

/// Prompts go to `out` as one JSON line each; answers are read from stdin
/// as one decision per line.
fn drive_external(state: &mut SessionState, out: &mut dyn Write, timeout: u64) -> anyhow::Result<()> {
    let (tx, rx) = mpsc::channel::<Decision>();
    std::thread::spawn(move || {
        for line in io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Decision>(&line) {
                Ok(d) => {
                    if tx.send(d).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    eprintln!("ignoring malformed decision: {e}");
                }
            }
        }
    });
    let mut failed: Option<io::Error> = None;
    let notify = |prompt: &DecisionPrompt, summary: &StateSummary| {
        let line = canonical_json(&ExternalPrompt { prompt, summary }, false)
            .expect("prompts serialize");
        if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
            failed.get_or_insert(e);
        }
    };
    let mut dm = ExternalPolicy::new(notify, rx, Duration::from_secs(timeout));
    drive(state, &mut dm as &mut dyn DecisionMaker)?;
    drop(dm);
    if let Some(e) = failed {
        return Err(e.into());
    }
    Ok(())
}
