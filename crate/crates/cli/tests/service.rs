use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Barrier};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use d2a_cli::agents::{build_agent, AgentArgs, AgentKind};
use d2a_cli::service::{router, AppState, ServiceConfig};
use d2a_core::agent::{Agent, AgentError, NoopAgent, Prediction, TurnContext};
use d2a_core::corpus::{read_corpus, FixtureDir};
use d2a_core::lang::ExecLimits;
use d2a_core::s3::signature;
use d2a_core::stack::Directive;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

/// Blocks in program prediction until released.
struct Gate(Arc<Barrier>);

impl Agent for Gate {
    fn describe(&self) -> String {
        "gate".into()
    }
    fn predict_program(&self, _: &TurnContext) -> Result<Prediction<Vec<Directive>>, AgentError> {
        self.0.wait();
        Ok(Prediction::ok(Vec::new()))
    }
    fn respond(&self, _: &TurnContext) -> Result<Prediction<String>, AgentError> {
        Ok(Prediction::ok("ok".into()))
    }
}

struct Down;

impl Agent for Down {
    fn describe(&self) -> String {
        "down".into()
    }
    fn predict_program(&self, _: &TurnContext) -> Result<Prediction<Vec<Directive>>, AgentError> {
        Err(d2a_core::agent::CompletionError::Unavailable("backend offline".into()).into())
    }
    fn respond(&self, _: &TurnContext) -> Result<Prediction<String>, AgentError> {
        unreachable!()
    }
}

fn app(extra: Vec<(&str, Arc<dyn Agent>)>) -> Arc<AppState> {
    let fixtures = FixtureDir::open(data("fixtures")).unwrap();
    let corpus = read_corpus(&std::fs::read_to_string(data("sample.xml")).unwrap()).unwrap();
    let mut agents: HashMap<String, Arc<dyn Agent>> = HashMap::new();
    agents.insert("mock".into(), build_agent(AgentKind::Mock, &AgentArgs::default(), &corpus, &fixtures).unwrap());
    agents.insert("noop".into(), Arc::new(NoopAgent));
    for (name, a) in extra {
        agents.insert(name.into(), a);
    }
    AppState::new(ServiceConfig {
        fixtures,
        agents,
        limits: ExecLimits::default(),
        turn_timeout: Duration::from_secs(5),
    })
}

async fn call(app: &Arc<AppState>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(app.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn create(app: &Arc<AppState>, body: Value) -> String {
    let (status, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn file_count_session() {
    let app = app(vec![]);
    let (status, created) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"fixture": "zoology-10", "agent": "mock", "script": "CountObjects_3", "opening": null})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let fixture = FixtureDir::open(data("fixtures")).unwrap().load_named("zoology-10").unwrap();
    assert_eq!(created["initial_signature"], signature(&fixture, None).to_string());
    assert_eq!(created["initial_signature"], "bcb532f1");
    let id = created["session_id"].as_str().unwrap();

    let turn = |u: &str| json!({ "utterance": u });
    let (_, first) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/user-turn"),
        Some(turn("Hi, please check the number of files in my bucket")),
    )
    .await;
    assert_eq!(first["response"], "What is the name of your bucket?");
    assert_eq!(first["stack"]["goals"][0]["status"], "drafting");
    assert_eq!(first["revision"], 1);

    let (_, second) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/user-turn"),
        Some(turn("The name is zoology-bucket and please check for .txt files")),
    )
    .await;
    assert_eq!(second["stack"]["goals"][0]["status"], "final");
    assert_eq!(second["outcomes"][0]["result"], 10);
    assert_eq!(second["outcomes"][0]["error"], Value::Null);
    assert_eq!(second["response"], "You have 10 txt files in \"zoology-bucket\" bucket.");
    assert_eq!(second["stack"]["goals"][0]["signature"], second["outcomes"][0]["signature"]);

    // GETs do not change anything.
    let (_, stack) = call(&app, "GET", &format!("/sessions/{id}/stack"), None).await;
    let (_, env) = call(&app, "GET", &format!("/sessions/{id}/environment"), None).await;
    let (_, stack_again) = call(&app, "GET", &format!("/sessions/{id}/stack"), None).await;
    assert_eq!(stack, stack_again);
    assert_eq!(stack["revision"], 2);
    assert_eq!(env["revision"], 2);
    assert_eq!(env["buckets"][0]["name"], "zoology-bucket");
    assert_eq!(env["buckets"][0]["objects"].as_array().unwrap().len(), 12);

    let (_, reset) = call(&app, "POST", &format!("/sessions/{id}/reset"), None).await;
    assert_eq!(reset["revision"], 3);
    assert_eq!(reset["signature"], reset["initial_signature"]);
    assert_eq!(reset["stack"]["serialized"], "<stack></stack>");

    let (status, deleted) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(deleted["revision"], 4);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/stack"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn errors() {
    let app = app(vec![("down", Arc::new(Down))]);
    let (status, _) = call(&app, "POST", "/sessions/missing/user-turn", Some(json!({"utterance": "hi"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/sessions", Some(json!({"fixture": "zoology", "agent": "nope"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", "/sessions", Some(json!({"fixture": "nope", "agent": "noop"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let id = create(&app, json!({"fixture": "zoology", "agent": "down"})).await;
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/user-turn"), Some(json!({"utterance": "hi"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(body["error"].as_str().unwrap().contains("backend offline"));
    let (_, stack) = call(&app, "GET", &format!("/sessions/{id}/stack"), None).await;
    assert_eq!(stack["revision"], 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_turn_gets_conflict() {
    let barrier = Arc::new(Barrier::new(2));
    let app = app(vec![("gate", Arc::new(Gate(barrier.clone())))]);
    let id = create(&app, json!({"fixture": "zoology", "agent": "gate"})).await;
    let uri = format!("/sessions/{id}/user-turn");
    let first = {
        let app = app.clone();
        let uri = uri.clone();
        tokio::spawn(async move { call(&app, "POST", &uri, Some(json!({"utterance": "one"}))).await })
    };
    // Wait until the first turn holds the session.
    let mut status = StatusCode::OK;
    for _ in 0..200 {
        let (s, _) = call(&app, "POST", &uri, Some(json!({"utterance": "two"}))).await;
        status = s;
        if s == StatusCode::CONFLICT {
            break;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/reset"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    barrier.wait();
    let (status, body) = first.await.unwrap();
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["revision"], 1);
}

#[tokio::test]
async fn transcript_and_snapshot() {
    let app = app(vec![]);
    let id = create(&app, json!({"fixture": "zoology-10", "agent": "mock", "script": "CountObjects_3", "opening": null})).await;
    for u in ["Hi, please check the number of files in my bucket", "The name is zoology-bucket and please check for .txt files"] {
        call(&app, "POST", &format!("/sessions/{id}/user-turn"), Some(json!({"utterance": u}))).await;
    }
    let (_, t) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    let dialogue = &read_corpus(t["transcript"].as_str().unwrap()).unwrap()[0];
    let mut env = FixtureDir::open(data("fixtures")).unwrap().load_named("zoology-10").unwrap();
    d2a_core::corpus::verify(dialogue, &mut env, &ExecLimits::default()).unwrap();
    let snap = app.snapshot();
    assert_eq!(snap["sessions"][0]["session_id"], id.as_str());
    assert_eq!(snap["sessions"][0]["revision"], 2);
}
