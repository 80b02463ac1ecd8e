//! Project planning core: task model, duration bounds, exact staffing,
//! the sequential-concessions planning engine and its scripted policies.

pub mod bounds;
pub mod document;
pub mod engine;
pub mod error;
pub mod model;
pub mod policy;
pub mod staffing;

pub use engine::{
    drive, replay, run_to_completion, start_session, Decision, DecisionPrompt, Plan, RunOutcome,
    SessionConfig, SessionState,
};
pub use error::{Error, Result};
pub use model::{
    classify_topology, is_valid_hierarchy, validate_project, Hierarchy, PrecedenceSemantics,
    Project, Task, TaskId, Topology, ValidationReport, Violation, Worker, WorkerId, EPS,
};
pub use policy::{DecisionMaker, Policy, Verdict};
