//! Canonical JSON documents: project files, plan exports and the number
//! formatting shared by every artifact the tools write.
//!
//! Canonical form means object keys sorted, two-space indentation (or a
//! single line for log records), and every real number printed with nine
//! fractional digits. Integers print as integers.

use std::collections::BTreeSet;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::engine::Plan;
use crate::error::{Error, Result};
use crate::model::{validate_project, Project, Task, TaskId, Worker, WorkerId};

pub const SCHEMA_VERSION: u64 = 1;

struct FixedReals<F>(F);

impl<F: Formatter> Formatter for FixedReals<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.9}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.9}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` canonically. `pretty` adds indentation and a trailing
/// newline; otherwise the output is a single line.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T, pretty: bool) -> Result<String> {
    // Round-trip through Value so map keys come out sorted.
    let tree = serde_json::to_value(value).map_err(|e| Error::Document(e.to_string()))?;
    let mut out = Vec::new();
    let written = if pretty {
        let mut ser = serde_json::Serializer::with_formatter(
            &mut out,
            FixedReals(PrettyFormatter::with_indent(b"  ")),
        );
        tree.serialize(&mut ser)
    } else {
        let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedReals(CompactFormatter));
        tree.serialize(&mut ser)
    };
    written.map_err(|e| Error::Document(e.to_string()))?;
    if pretty {
        out.push(b'\n');
    }
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub id: String,
    #[serde(default)]
    pub predecessors: Vec<String>,
    pub work: Vec<f64>,
    #[serde(default)]
    pub resources: Vec<u64>,
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerRecord {
    pub id: String,
    pub skills: Vec<u8>,
    pub rates: Vec<f64>,
}

/// On-disk form of a [`Project`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectDocument {
    pub schema_version: u64,
    pub work_types: Vec<String>,
    #[serde(default)]
    pub resource_types: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<f64>,
    pub tasks: Vec<TaskRecord>,
    #[serde(default)]
    pub workers: Vec<WorkerRecord>,
}

impl From<&Project> for ProjectDocument {
    fn from(p: &Project) -> Self {
        ProjectDocument {
            schema_version: SCHEMA_VERSION,
            work_types: p.work_types.clone(),
            resource_types: p.resource_types.clone(),
            budget: p.budget,
            deadline: p.deadline,
            tasks: p
                .tasks
                .iter()
                .map(|t| TaskRecord {
                    id: t.id.0.clone(),
                    predecessors: t.predecessors.iter().map(|p| p.0.clone()).collect(),
                    work: t.work.clone(),
                    resources: t.resources.clone(),
                    duration: t.duration,
                    declared_cost: t.declared_cost,
                })
                .collect(),
            workers: p.workers.iter().map(worker_record).collect(),
        }
    }
}

pub fn worker_record(w: &Worker) -> WorkerRecord {
    WorkerRecord {
        id: w.id.0.clone(),
        skills: w.skills.iter().map(|&s| u8::from(s)).collect(),
        rates: w.rates.clone(),
    }
}

impl TryFrom<WorkerRecord> for Worker {
    type Error = Error;

    fn try_from(w: WorkerRecord) -> Result<Self> {
        let skills = w
            .skills
            .iter()
            .map(|&s| match s {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Document(format!(
                    "worker {}: skill flags must be 0 or 1, got {other}",
                    w.id
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Worker { id: WorkerId(w.id), skills, rates: w.rates })
    }
}

impl TryFrom<ProjectDocument> for Project {
    type Error = Error;

    fn try_from(doc: ProjectDocument) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(doc.schema_version));
        }
        let mut tasks = Vec::with_capacity(doc.tasks.len());
        for t in doc.tasks {
            let predecessors: BTreeSet<TaskId> =
                t.predecessors.iter().map(|p| TaskId(p.clone())).collect();
            if predecessors.len() != t.predecessors.len() {
                return Err(Error::Document(format!("task {}: repeated predecessor", t.id)));
            }
            tasks.push(Task {
                id: TaskId(t.id),
                predecessors,
                work: t.work,
                resources: t.resources,
                duration: t.duration,
                declared_cost: t.declared_cost,
            });
        }
        let workers = doc
            .workers
            .into_iter()
            .map(Worker::try_from)
            .collect::<Result<Vec<_>>>()?;
        Ok(Project {
            work_types: doc.work_types,
            resource_types: doc.resource_types,
            tasks,
            workers,
            budget: doc.budget,
            deadline: doc.deadline,
        })
    }
}

/// Parses and validates a project document.
pub fn load_project(bytes: &[u8]) -> Result<Project> {
    let doc: ProjectDocument =
        serde_json::from_slice(bytes).map_err(|e| Error::Document(e.to_string()))?;
    let project = Project::try_from(doc)?;
    let report = validate_project(&project);
    if !report.is_valid() {
        return Err(Error::InvalidProject(report));
    }
    Ok(project)
}

pub fn save_project(project: &Project) -> Result<Vec<u8>> {
    Ok(canonical_json(&ProjectDocument::from(project), true)?.into_bytes())
}

/// Plan as a canonical JSON document.
pub fn plan_document(plan: &Plan) -> Result<String> {
    canonical_json(plan, true)
}

/// One row per scheduled task: id, start, finish, crew, cost. Crew members
/// are written `worker:work_type_label` and joined with `;`.
pub fn schedule_csv(plan: &Plan, project: &Project) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Document(e.to_string());
    w.write_record(["id", "start", "finish", "crew", "cost"]).map_err(csv_err)?;
    for s in &plan.schedule {
        let crew: Vec<String> = s
            .crew
            .iter()
            .map(|m| {
                let label = project
                    .work_types
                    .get(m.work_type)
                    .cloned()
                    .unwrap_or_else(|| m.work_type.to_string());
                format!("{}:{}", m.worker, label)
            })
            .collect();
        w.write_record([
            s.task.0.clone(),
            format!("{:.9}", s.start),
            format!("{:.9}", s.finish),
            crew.join(";"),
            format!("{:.9}", s.cost),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Document(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields"))
}
