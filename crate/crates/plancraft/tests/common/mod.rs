#![allow(dead_code)]

use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use plancraft_core::{Project, Task, Worker};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

pub const FIXTURES: [&str; 6] = ["straight_line", "star", "overrun", "scarce", "infeasible", "general"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture(name)).unwrap()
}

pub fn random_worker(rng: &mut ChaCha8Rng, id: String, q: usize) -> Worker {
    let skills: Vec<bool> = (0..q).map(|_| rng.gen_bool(0.6)).collect();
    let rates = (0..q).map(|_| f64::from(rng.gen_range(0u32..10))).collect();
    Worker::new(id, skills, rates)
}

pub fn random_pool(rng: &mut ChaCha8Rng, m: usize, q: usize) -> Vec<Worker> {
    (0..m).map(|j| random_worker(rng, format!("W{j}"), q)).collect()
}

pub fn random_task(rng: &mut ChaCha8Rng, id: String, q: usize, max_work: u32) -> Task {
    let dt = f64::from(rng.gen_range(1u32..=4));
    let work = (0..q).map(|_| f64::from(rng.gen_range(0..=max_work))).collect();
    Task::new(id, dt, work)
}

/// Random DAG over `n` tasks: edges run from lower to higher index with
/// probability `density`; ids are a random relabeling.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, q: usize, density: f64) -> Project {
    let mut labels: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        labels.swap(i, rng.gen_range(0..=i));
    }
    let mut p = Project::with_work_types(q);
    for i in 0..n {
        let preds: Vec<String> = (0..i)
            .filter(|_| rng.gen_bool(density))
            .map(|j| format!("T{:02}", labels[j]))
            .collect();
        let mut t = random_task(rng, format!("T{:02}", labels[i]), q, 4);
        t.duration = f64::from(rng.gen_range(1u32..=8)) / 2.0;
        p.tasks.push(t.after(preds));
    }
    p
}

pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Project {
    let mut p = Project::with_work_types(q);
    for i in 0..n {
        let mut t = random_task(rng, format!("C{i:02}"), q, 5);
        t.duration = f64::from(rng.gen_range(1u32..=12)) / 4.0;
        if i > 0 {
            t = t.after([format!("C{:02}", i - 1)]);
        }
        p.tasks.push(t);
    }
    p
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub fn parse(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

pub async fn create_project(app: &Router, doc: &[u8]) -> String {
    let (status, body) = call(app, "POST", "/projects", Some(String::from_utf8(doc.to_vec()).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    parse(&body)["id"].as_str().unwrap().to_string()
}

pub async fn create_session(app: &Router, project_id: &str, config: Option<serde_json::Value>) -> serde_json::Value {
    let mut req = serde_json::json!({ "project_id": project_id });
    if let Some(c) = config {
        req["config"] = c;
    }
    let (status, body) = call(app, "POST", "/sessions", Some(req.to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    parse(&body)
}

/// Answers every prompt the way the always-accept policy would, through
/// the wire API, and returns the final session view.
pub async fn drive_always_accept(app: &Router, session_id: &str) -> serde_json::Value {
    use plancraft_core::engine::StateSummary;
    use plancraft_core::{DecisionPrompt, Policy, Verdict};
    loop {
        let (status, body) = call(app, "GET", &format!("/sessions/{session_id}"), None).await;
        assert_eq!(status, StatusCode::OK);
        let view = parse(&body);
        if view["phase"]["phase"] != "awaiting_decision" {
            return view;
        }
        let prompt: DecisionPrompt = serde_json::from_value(view["phase"]["prompt"].clone()).unwrap();
        let summary = StateSummary {
            clock: view["clock"].as_f64().unwrap(),
            committed_cost: view["committed_cost"].as_f64().unwrap(),
            t_star: view["t_star"].as_f64().unwrap(),
            c_star: view["c_star"].as_f64(),
        };
        let seq = view["next_seq"].as_u64().unwrap();
        let (uri, req) = match Policy::AlwaysAccept.decide(&prompt, &summary) {
            Verdict::Decide(d) => (
                format!("/sessions/{session_id}/decisions"),
                serde_json::json!({ "seq": seq, "decision": d }),
            ),
            Verdict::Abstain(reason) => (
                format!("/sessions/{session_id}/abstain"),
                serde_json::json!({ "seq": seq, "reason": reason }),
            ),
        };
        let (status, body) = call(app, "POST", &uri, Some(req.to_string())).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
}
