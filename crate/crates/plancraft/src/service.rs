//! HTTP session service.
//!
//! Bodies are canonical JSON in both directions. Each session sits behind
//! its own async mutex, so decisions on one session are applied one at a
//! time while other sessions proceed independently. A decision post must
//! carry the session's `next_seq`; anything else is answered with 409.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use plancraft_core::document::{
    canonical_json, plan_document, save_project, schedule_csv, ProjectDocument,
};
use plancraft_core::{
    validate_project, Decision, Error as CoreError, PrecedenceSemantics, Project, SessionConfig,
    SessionState,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::store::{self, AbstainRecord, DecisionRecord, SessionCreated, SessionLog};
use crate::views::{bounds_view, ideal_view, session_view, validation_view};

struct ProjectEntry {
    project: Project,
}

struct SessionEntry {
    id: String,
    project_id: String,
    state: SessionState,
    decisions: Vec<Decision>,
    abstained: bool,
    log: SessionLog,
}

impl SessionEntry {
    fn next_seq(&self) -> u64 {
        self.decisions.len() as u64 + 1 + u64::from(self.abstained)
    }

    /// Rejects an answer unless a prompt is pending and `seq` is the next
    /// sequence number.
    fn expect_answer(&self, seq: u64) -> Result<u64, ApiError> {
        if self.state.prompt().is_none() {
            return Err(ApiError::conflict(format!(
                "session is {}, no decision is pending",
                self.state.phase.name()
            )));
        }
        let expected = self.next_seq();
        if seq != expected {
            return Err(ApiError::conflict(format!(
                "stale sequence number {seq}, expected {expected}"
            )));
        }
        Ok(expected)
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Registry>,
}

struct Registry {
    data_dir: Option<PathBuf>,
    projects: RwLock<BTreeMap<String, Arc<ProjectEntry>>>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<SessionEntry>>>>,
}

impl AppState {
    /// Opens the service state. With a data directory, stored projects are
    /// loaded and every session log is replayed.
    pub fn open(data_dir: Option<PathBuf>) -> anyhow::Result<Self> {
        let mut projects = BTreeMap::new();
        let mut sessions = BTreeMap::new();
        if let Some(dir) = &data_dir {
            fs::create_dir_all(dir.join("projects"))?;
            fs::create_dir_all(dir.join("sessions"))?;
            for entry in fs::read_dir(dir.join("projects"))? {
                let path = entry?.path();
                let Some(id) = stem(&path, "json") else { continue };
                let doc: ProjectDocument = serde_json::from_slice(&fs::read(&path)?)?;
                projects.insert(id, Arc::new(ProjectEntry { project: Project::try_from(doc)? }));
            }
            for entry in fs::read_dir(dir.join("sessions"))? {
                let path = entry?.path();
                let Some(id) = stem(&path, "jsonl") else { continue };
                let restored = store::restore(&path)
                    .map_err(|e| e.context(format!("restoring session {id}")))?;
                let entry = SessionEntry {
                    id: id.clone(),
                    project_id: restored.created.project_id,
                    state: restored.state,
                    decisions: restored.decisions,
                    abstained: restored.abstained,
                    log: restored.log,
                };
                sessions.insert(id, Arc::new(Mutex::new(entry)));
            }
        }
        Ok(AppState {
            inner: Arc::new(Registry {
                data_dir,
                projects: RwLock::new(projects),
                sessions: RwLock::new(sessions),
            }),
        })
    }

    fn project(&self, id: &str) -> Result<Arc<ProjectEntry>, ApiError> {
        self.inner
            .projects
            .read()
            .expect("project registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("project", id))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.inner
            .sessions
            .read()
            .expect("session registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }
}

fn stem(path: &std::path::Path, ext: &str) -> Option<String> {
    if path.extension()? != ext {
        return None;
    }
    Some(path.file_stem()?.to_str()?.to_string())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/validation", get(project_validation))
        .route("/projects/{id}/bounds", get(project_bounds))
        .route("/projects/{id}/ideal", get(project_ideal))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/decisions", post(post_decision))
        .route("/sessions/{id}/dry-run", post(post_dry_run))
        .route("/sessions/{id}/abstain", post(post_abstain))
        .route("/sessions/{id}/plan", get(get_plan))
        .route("/sessions/{id}/events", get(get_events))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(port: u16, data_dir: Option<PathBuf>) -> anyhow::Result<()> {
    let state = AppState::open(data_dir)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Option<serde_json::Value>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: &'a Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), detail: None }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} with id {id}"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let message = e.to_string();
        match e {
            CoreError::InvalidProject(report) => ApiError {
                detail: serde_json::to_value(&report).ok(),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_project", message)
            },
            CoreError::Infeasible(report) => ApiError {
                detail: serde_json::to_value(&report).ok(),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "infeasible", message)
            },
            CoreError::IllegalDecision(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "illegal_decision", message)
            }
            CoreError::Protocol(_) => Self::new(StatusCode::CONFLICT, "conflict", message),
            CoreError::Document(_) | CoreError::SchemaVersion(_) | CoreError::InvalidInput(_) => {
                Self::bad_request(message)
            }
            CoreError::Invariant(_) => Self::internal(message),
        }
    }
}

impl From<anyhow::Error> for ApiError {
    fn from(e: anyhow::Error) -> Self {
        Self::internal(format!("{e:#}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code, message: &self.message, detail: &self.detail };
        json(self.status, &body)
    }
}

fn json<T: Serialize + ?Sized>(status: StatusCode, value: &T) -> Response {
    match canonical_json(value, true) {
        Ok(text) => raw_json(status, text),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn raw_json(status: StatusCode, text: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn parse<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

type ApiResult = Result<Response, ApiError>;

#[derive(Debug, Deserialize)]
struct SemanticsQuery {
    semantics: Option<String>,
}

impl SemanticsQuery {
    fn semantics(&self) -> Result<PrecedenceSemantics, ApiError> {
        match &self.semantics {
            None => Ok(PrecedenceSemantics::FinishToStart),
            Some(s) => s.parse().map_err(ApiError::bad_request),
        }
    }
}

#[derive(Serialize)]
struct ProjectCreated {
    id: String,
    validation: crate::views::ValidationView,
}

async fn create_project(State(app): State<AppState>, body: Bytes) -> ApiResult {
    let doc: ProjectDocument = parse(&body)?;
    // Keep the project exactly as its stored document reads back, so a
    // restarted service replays sessions on identical numbers.
    let saved = save_project(&Project::try_from(doc)?)?;
    let doc: ProjectDocument = serde_json::from_slice(&saved).map_err(anyhow::Error::from)?;
    let project = Project::try_from(doc)?;
    let id = uuid::Uuid::new_v4().to_string();
    if let Some(dir) = &app.inner.data_dir {
        fs::write(dir.join("projects").join(format!("{id}.json")), &saved)
            .map_err(|e| ApiError::internal(e.to_string()))?;
    }
    let validation = validation_view(&project);
    app.inner
        .projects
        .write()
        .expect("project registry lock")
        .insert(id.clone(), Arc::new(ProjectEntry { project }));
    Ok(json(StatusCode::CREATED, &ProjectCreated { id, validation }))
}

async fn list_projects(State(app): State<AppState>) -> ApiResult {
    let ids: Vec<String> = app
        .inner
        .projects
        .read()
        .expect("project registry lock")
        .keys()
        .cloned()
        .collect();
    Ok(json(StatusCode::OK, &serde_json::json!({ "projects": ids })))
}

async fn get_project(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let entry = app.project(&id)?;
    let body = serde_json::json!({
        "id": id,
        "project": ProjectDocument::from(&entry.project),
        "validation": validation_view(&entry.project),
    });
    Ok(json(StatusCode::OK, &body))
}

async fn project_validation(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let entry = app.project(&id)?;
    Ok(json(StatusCode::OK, &validation_view(&entry.project)))
}

fn require_valid(project: &Project) -> Result<(), ApiError> {
    let report = validate_project(project);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CoreError::InvalidProject(report).into())
    }
}

async fn project_bounds(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SemanticsQuery>,
) -> ApiResult {
    let entry = app.project(&id)?;
    require_valid(&entry.project)?;
    Ok(json(StatusCode::OK, &bounds_view(&entry.project, q.semantics()?)?))
}

async fn project_ideal(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SemanticsQuery>,
) -> ApiResult {
    let entry = app.project(&id)?;
    require_valid(&entry.project)?;
    Ok(json(StatusCode::OK, &ideal_view(&entry.project, q.semantics()?)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    project_id: String,
    #[serde(default)]
    config: SessionConfig,
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> ApiResult {
    let req: CreateSession = parse(&body)?;
    let project = app.project(&req.project_id)?.project.clone();
    let mut state = SessionState::start(project, req.config)?;
    state.advance_until_blocked()?;
    let id = uuid::Uuid::new_v4().to_string();
    let path = app
        .inner
        .data_dir
        .as_ref()
        .map(|d| d.join("sessions").join(format!("{id}.jsonl")));
    let mut log = SessionLog::create(path)?;
    let created = SessionCreated {
        session_id: id.clone(),
        project_id: req.project_id.clone(),
        config: req.config,
        project: ProjectDocument::from(&state.project),
    };
    log.append(store::CREATED, serde_json::to_value(&created).map_err(anyhow::Error::from)?)?;
    log.append_events(&state.log)?;
    let entry = SessionEntry {
        id: id.clone(),
        project_id: req.project_id,
        state,
        decisions: Vec::new(),
        abstained: false,
        log,
    };
    let view = session_view(&entry.id, &entry.project_id, entry.next_seq(), &entry.state);
    app.inner
        .sessions
        .write()
        .expect("session registry lock")
        .insert(id, Arc::new(Mutex::new(entry)));
    Ok(json(StatusCode::CREATED, &view))
}

#[derive(Serialize)]
struct SessionListing {
    id: String,
    project_id: String,
    phase: &'static str,
    next_seq: u64,
}

async fn list_sessions(State(app): State<AppState>) -> ApiResult {
    let handles: Vec<_> = app
        .inner
        .sessions
        .read()
        .expect("session registry lock")
        .values()
        .cloned()
        .collect();
    let mut out = Vec::with_capacity(handles.len());
    for h in handles {
        let s = h.lock().await;
        out.push(SessionListing {
            id: s.id.clone(),
            project_id: s.project_id.clone(),
            phase: s.state.phase.name(),
            next_seq: s.next_seq(),
        });
    }
    Ok(json(StatusCode::OK, &serde_json::json!({ "sessions": out })))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let handle = app.session(&id)?;
    let s = handle.lock().await;
    Ok(json(StatusCode::OK, &session_view(&s.id, &s.project_id, s.next_seq(), &s.state)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionPost {
    seq: u64,
    decision: Decision,
}

#[derive(Serialize)]
struct DecisionApplied {
    applied_seq: u64,
    t_delta: f64,
    c_delta: f64,
    session: crate::views::SessionView,
}

async fn post_decision(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let mut req: DecisionPost = parse(&body)?;
    // Apply the decision as the log will record it.
    req.decision = serde_json::from_str(&canonical_json(&req.decision, false)?)
        .map_err(anyhow::Error::from)?;
    let handle = app.session(&id)?;
    let mut s = handle.lock().await;
    let expected = s.expect_answer(req.seq)?;
    s.state.check_decision(&req.decision)?;

    let mut next = s.state.clone();
    let (clock, cost, events_before) = (next.clock, next.committed_cost, next.log.len());
    next.apply_decision(req.decision.clone())?;
    next.advance_until_blocked()?;

    let record = DecisionRecord { seq: expected, decision: req.decision.clone() };
    s.log.append(store::DECISION, serde_json::to_value(&record).map_err(anyhow::Error::from)?)?;
    s.log.append_events(&next.log[events_before..])?;
    s.state = next;
    s.decisions.push(req.decision);

    let body = DecisionApplied {
        applied_seq: expected,
        t_delta: s.state.clock - clock,
        c_delta: s.state.committed_cost - cost,
        session: session_view(&s.id, &s.project_id, s.next_seq(), &s.state),
    };
    Ok(json(StatusCode::OK, &body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AbstainPost {
    seq: u64,
    reason: String,
}

/// Ends the session in stalemate at the decision maker's request.
async fn post_abstain(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let req: AbstainPost = parse(&body)?;
    let handle = app.session(&id)?;
    let mut s = handle.lock().await;
    let expected = s.expect_answer(req.seq)?;
    let mut next = s.state.clone();
    let events_before = next.log.len();
    next.abstain(req.reason.clone())?;
    let record = AbstainRecord { seq: expected, reason: req.reason };
    s.log.append(store::ABSTAIN, serde_json::to_value(&record).map_err(anyhow::Error::from)?)?;
    s.log.append_events(&next.log[events_before..])?;
    s.state = next;
    s.abstained = true;
    Ok(json(StatusCode::OK, &session_view(&s.id, &s.project_id, s.next_seq(), &s.state)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DryRunPost {
    decision: Decision,
}

async fn post_dry_run(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult {
    let req: DryRunPost = parse(&body)?;
    let handle = app.session(&id)?;
    let s = handle.lock().await;
    Ok(json(StatusCode::OK, &s.state.dry_run(&req.decision)?))
}

#[derive(Deserialize)]
struct PlanQuery {
    format: Option<String>,
}

async fn get_plan(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PlanQuery>,
) -> ApiResult {
    let handle = app.session(&id)?;
    let s = handle.lock().await;
    let Some(plan) = &s.state.plan else {
        return Err(ApiError::conflict(format!(
            "session is {}, no plan yet",
            s.state.phase.name()
        )));
    };
    match q.format.as_deref() {
        None | Some("json") => Ok(raw_json(StatusCode::OK, plan_document(plan)?)),
        Some("csv") => Ok((
            StatusCode::OK,
            [(header::CONTENT_TYPE, "text/csv")],
            schedule_csv(plan, &s.state.project)?,
        )
            .into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown plan format `{other}`"))),
    }
}

async fn get_events(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let handle = app.session(&id)?;
    let s = handle.lock().await;
    Ok(json(StatusCode::OK, &serde_json::json!({ "events": s.state.log })))
}
