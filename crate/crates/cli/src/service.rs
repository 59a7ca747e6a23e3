//! HTTP session service: one environment and program stack per session.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use d2a_core::agent::{Agent, Session, TurnOutput};
use d2a_core::corpus::{write_dialogue, FixtureDir};
use d2a_core::lang::ExecLimits;
use d2a_core::s3::S3State;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

pub struct ServiceConfig {
    pub fixtures: FixtureDir,
    /// Agents by name, as requested in `POST /sessions`.
    pub agents: HashMap<String, Arc<dyn Agent>>,
    pub limits: ExecLimits,
    /// Upper bound on one user turn, completion calls included.
    pub turn_timeout: Duration,
}

struct Slot {
    session: Mutex<Session>,
    agent: Arc<dyn Agent>,
    busy: AtomicBool,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))
    }

    /// Every live session as JSON, for shutdown snapshots.
    pub fn snapshot(&self) -> Value {
        let sessions = self.sessions.lock().unwrap();
        let mut ids: Vec<&String> = sessions.keys().collect();
        ids.sort();
        let list: Vec<Value> = ids
            .into_iter()
            .map(|id| {
                let s = sessions[id].session.lock().unwrap();
                json!({
                    "session_id": s.id,
                    "fixture": s.fixture,
                    "script": s.script,
                    "revision": s.revision,
                    "created_at": s.created_at.to_rfc3339(),
                    "environment": s.env.to_fixture(),
                    "transcript": write_dialogue(&s.transcript()),
                })
            })
            .collect();
        json!({ "sessions": list })
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

#[derive(Deserialize)]
struct CreateSession {
    fixture: String,
    agent: String,
    /// Key for scripted agents; defaults to the fixture name.
    #[serde(default)]
    script: Option<String>,
    /// Agent opening line; `null` lets the user speak first.
    #[serde(default = "default_opening")]
    opening: Option<String>,
}

fn default_opening() -> Option<String> {
    Some(d2a_core::agent::GREETING.to_string())
}

#[derive(Deserialize)]
struct UserTurn {
    utterance: String,
}

#[derive(Serialize)]
struct OutcomeView {
    uid: String,
    result: Value,
    error: Option<d2a_core::lang::ErrorRecord>,
    signature: String,
}

fn stack_view(s: &Session) -> Value {
    let goals: Vec<Value> = s
        .stack
        .goals
        .iter()
        .map(|g| {
            json!({
                "uid": g.uid,
                "status": g.status.as_str(),
                "code": g.code,
                "result": g.outcome.as_ref().map(|o| o.return_value.clone()),
                "error": g.outcome.as_ref().and_then(|o| o.error.clone()),
                "signature": g.post_signature.as_ref().map(|x| x.to_string()),
            })
        })
        .collect();
    json!({ "serialized": s.stack.serialize(), "goals": goals })
}

fn environment_view(env: &S3State) -> Value {
    let buckets: Vec<Value> = env
        .buckets
        .iter()
        .map(|(name, b)| {
            let objects: Vec<Value> = b
                .objects
                .iter()
                .map(|(key, body)| json!({ "key": key, "size": body.len() }))
                .collect();
            json!({ "name": name, "region": b.region, "objects": objects })
        })
        .collect();
    json!({ "buckets": buckets })
}

fn turn_view(s: &Session, out: &TurnOutput) -> Value {
    let outcomes: Vec<OutcomeView> = out
        .executions
        .iter()
        .map(|e| OutcomeView {
            uid: e.uid.clone(),
            result: e.outcome.return_value.clone(),
            error: e.outcome.error.clone(),
            signature: e.signature.to_string(),
        })
        .collect();
    json!({
        "revision": s.revision,
        "turn": s.turns,
        "directives": out.directives,
        "outcomes": outcomes,
        "deferred": out.deferred,
        "response": out.response,
        "notes": out.notes,
        "stack": stack_view(s),
        "signature": s.environment_signature().to_string(),
    })
}

async fn create_session(State(app): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult {
    let agent = app
        .config
        .agents
        .get(&req.agent)
        .cloned()
        .ok_or_else(|| {
            let mut known: Vec<&String> = app.config.agents.keys().collect();
            known.sort();
            ApiError(StatusCode::BAD_REQUEST, format!("unknown agent {:?}; available: {known:?}", req.agent))
        })?;
    let env = app
        .config
        .fixtures
        .load_named(&req.fixture)
        .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let script = req.script.unwrap_or_else(|| req.fixture.clone());
    let session = Session::new(id.clone(), script, req.fixture, env).with_opening(req.opening.as_deref());
    let body = json!({
        "session_id": id,
        "revision": session.revision,
        "initial_signature": session.initial_signature().to_string(),
        "opening": req.opening,
    });
    app.sessions.lock().unwrap().insert(
        id,
        Arc::new(Slot {
            session: Mutex::new(session),
            agent,
            busy: AtomicBool::new(false),
        }),
    );
    Ok(Json(body))
}

struct BusyGuard(Arc<Slot>);

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.busy.store(false, Ordering::SeqCst);
    }
}

async fn user_turn(State(app): State<Arc<AppState>>, Path(id): Path<String>, Json(req): Json<UserTurn>) -> ApiResult {
    let slot = app.slot(&id)?;
    if slot.busy.swap(true, Ordering::SeqCst) {
        return Err(ApiError(StatusCode::CONFLICT, format!("session {id} already has a turn in flight")));
    }
    let _guard = BusyGuard(slot.clone());
    // The turn runs on a copy so a timed-out turn leaves the session as it was.
    let mut working = slot.session.lock().unwrap().clone();
    let agent = slot.agent.clone();
    let limits = app.config.limits;
    let task = tokio::task::spawn_blocking(move || {
        let out = working.user_turn(agent.as_ref(), &req.utterance, &limits);
        (working, out)
    });
    let (working, out) = match tokio::time::timeout(app.config.turn_timeout, task).await {
        Err(_) => return Err(ApiError(StatusCode::BAD_GATEWAY, "agent turn timed out".into())),
        Ok(Err(e)) => return Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
        Ok(Ok(r)) => r,
    };
    let out = out.map_err(|e| ApiError(StatusCode::BAD_GATEWAY, e.to_string()))?;
    let mut session = slot.session.lock().unwrap();
    *session = working;
    Ok(Json(turn_view(&session, &out)))
}

async fn get_stack(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot(&id)?;
    let s = slot.session.lock().unwrap();
    Ok(Json(json!({ "revision": s.revision, "stack": stack_view(&s) })))
}

async fn get_environment(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot(&id)?;
    let s = slot.session.lock().unwrap();
    let mut body = environment_view(&s.env);
    body["revision"] = json!(s.revision);
    body["signature"] = json!(s.environment_signature().to_string());
    Ok(Json(body))
}

async fn get_transcript(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot(&id)?;
    let s = slot.session.lock().unwrap();
    Ok(Json(json!({ "revision": s.revision, "transcript": write_dialogue(&s.transcript()) })))
}

async fn reset(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app.slot(&id)?;
    if slot.busy.load(Ordering::SeqCst) {
        return Err(ApiError(StatusCode::CONFLICT, format!("session {id} has a turn in flight")));
    }
    let mut s = slot.session.lock().unwrap();
    s.reset();
    Ok(Json(json!({
        "revision": s.revision,
        "initial_signature": s.initial_signature().to_string(),
        "signature": s.environment_signature().to_string(),
        "stack": stack_view(&s),
    })))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let slot = app
        .sessions
        .lock()
        .unwrap()
        .remove(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))?;
    let revision = slot.session.lock().unwrap().revision + 1;
    Ok(Json(json!({ "revision": revision, "deleted": id })))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/user-turn", post(user_turn))
        .route("/sessions/{id}/stack", get(get_stack))
        .route("/sessions/{id}/environment", get(get_environment))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/sessions/{id}/reset", post(reset))
        .layer(CorsLayer::permissive())
        .with_state(app)
}

/// Serves until ctrl-c, then optionally writes every session to `snapshot`.
pub async fn serve(app: Arc<AppState>, addr: SocketAddr, snapshot: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = snapshot {
        std::fs::write(&path, serde_json::to_string_pretty(&app.snapshot())?)?;
        eprintln!("wrote session snapshot to {}", path.display());
    }
    Ok(())
}
