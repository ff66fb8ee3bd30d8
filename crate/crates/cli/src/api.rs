//! The `/v1` HTTP API. Every response is an envelope carrying the request
//! id and actor; commands are idempotent per `x-request-id`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use atrium_core::trace::{back_trace, impact_of, integrity_check};
use atrium_core::{ActorId, Command, Ctx, EngineError, EntityId, ErrorCategory, ProjectState};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::project::{AppError, Project};

pub const ACTOR_HEADER: &str = "x-atrium-actor";
pub const RATIONALE_HEADER: &str = "x-atrium-rationale";
pub const REQUEST_ID_HEADER: &str = "x-request-id";

/// Collection path segment and the state field it reads.
const COLLECTIONS: [(&str, &str); 16] = [
    ("elements", "elements"),
    ("segments", "segments"),
    ("failure-modes", "failure_modes"),
    ("cfas", "cfas"),
    ("design-goals", "design_goals"),
    ("das", "design_alternatives"),
    ("assumptions", "assumptions"),
    ("clarifications", "clarifications"),
    ("tasks", "tasks"),
    ("risks", "risks"),
    ("selections", "selections"),
    ("links", "links"),
    ("iterations", "iterations"),
    ("review-queues", "review_queues"),
    ("changelog", "changelog"),
    ("oplog", "oplog"),
];

struct Shared {
    project: Project,
    /// Responses already sent, by request id.
    replies: HashMap<String, (StatusCode, Value)>,
}

#[derive(Clone)]
pub struct AppState(Arc<Mutex<Shared>>);

pub fn router(project: Project) -> Router {
    let state = AppState(Arc::new(Mutex::new(Shared { project, replies: HashMap::new() })));
    Router::new()
        .route("/v1/commands/{op}", post(command))
        .route("/v1/changes", get(changes))
        .route("/v1/gate", get(gate))
        .route("/v1/integrity", get(integrity))
        .route("/v1/trace/back/{id}", get(trace_back))
        .route("/v1/trace/impact/{id}", get(trace_impact))
        .route("/v1/{collection}", get(collection))
        .route("/v1/{collection}/{id}", get(entity))
        .with_state(state)
}

pub async fn serve(project: Project, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(project)).await
}

struct Meta {
    request_id: Option<String>,
    actor: String,
    rationale: Option<String>,
}

impl Meta {
    fn from(headers: &HeaderMap) -> Meta {
        let get = |name: &str| headers.get(name).and_then(|v| v.to_str().ok()).map(str::to_owned);
        Meta {
            request_id: get(REQUEST_ID_HEADER),
            actor: get(ACTOR_HEADER).unwrap_or_else(|| "api".to_owned()),
            rationale: get(RATIONALE_HEADER),
        }
    }

    fn ok(&self, payload: impl serde::Serialize) -> (StatusCode, Value) {
        let payload = serde_json::to_value(payload).expect("payload serializes");
        (StatusCode::OK, json!({ "request_id": self.request_id, "actor": self.actor, "payload": payload }))
    }

    fn fail(&self, status: StatusCode, error: Value) -> (StatusCode, Value) {
        (status, json!({ "request_id": self.request_id, "actor": self.actor, "error": error }))
    }

    fn app_error(&self, e: &AppError) -> (StatusCode, Value) {
        self.fail(status_of(e.category()), e.to_json())
    }

    fn plain_error(&self, status: StatusCode, name: &str, message: String) -> (StatusCode, Value) {
        self.fail(status, json!({ "name": name, "message": message, "detail": null, "offending_ids": [] }))
    }
}

fn status_of(c: ErrorCategory) -> StatusCode {
    match c {
        ErrorCategory::NotFound => StatusCode::NOT_FOUND,
        ErrorCategory::Invalid => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorCategory::Conflict => StatusCode::CONFLICT,
    }
}

fn reply((status, body): (StatusCode, Value)) -> Response {
    (status, Json(body)).into_response()
}

async fn command(State(app): State<AppState>, Path(op): Path<String>, headers: HeaderMap, body: String) -> Response {
    let meta = Meta::from(&headers);
    let mut shared = app.0.lock().expect("state lock");
    if let Some(cached) = meta.request_id.as_ref().and_then(|id| shared.replies.get(id)) {
        return reply(cached.clone());
    }
    let op = op.replace('-', "_");
    let out = if !Command::NAMES.contains(&op.as_str()) {
        meta.plain_error(StatusCode::NOT_FOUND, "UnknownOperation", format!("no command named {op:?}"))
    } else {
        match parse_command(&op, &body) {
            Err(message) => meta.plain_error(StatusCode::BAD_REQUEST, "MalformedRequest", message),
            Ok(cmd) => {
                let ctx = Ctx { actor: ActorId::new(meta.actor.clone()), rationale: meta.rationale.clone() };
                match shared.project.apply(cmd, &ctx) {
                    Ok(applied) => meta.ok(applied),
                    Err(e) => meta.app_error(&e),
                }
            }
        }
    };
    if let Some(id) = &meta.request_id {
        shared.replies.insert(id.clone(), out.clone());
    }
    reply(out)
}

fn parse_command(op: &str, body: &str) -> Result<Command, String> {
    let mut v: Value = if body.trim().is_empty() {
        json!({})
    } else {
        serde_json::from_str(body).map_err(|e| e.to_string())?
    };
    let obj = v.as_object_mut().ok_or("command body must be a JSON object")?;
    obj.insert("op".into(), op.into());
    serde_json::from_value(v).map_err(|e| e.to_string())
}

fn with_state<F>(app: &AppState, headers: &HeaderMap, f: F) -> Response
where
    F: FnOnce(&Meta, &ProjectState) -> (StatusCode, Value),
{
    let meta = Meta::from(headers);
    let shared = app.0.lock().expect("state lock");
    reply(f(&meta, shared.project.engine().state()))
}

#[derive(Deserialize)]
struct After {
    #[serde(default)]
    after: u64,
}

/// Change entries with a sequence above `after`, in order.
async fn changes(State(app): State<AppState>, Query(q): Query<After>, headers: HeaderMap) -> Response {
    with_state(&app, &headers, |m, st| {
        let entries: Vec<_> = st.changelog.iter().filter(|e| e.sequence > q.after).collect();
        let cursor = st.changelog.last().map_or(0, |e| e.sequence);
        m.ok(json!({ "entries": entries, "cursor": cursor }))
    })
}

async fn gate(State(app): State<AppState>, headers: HeaderMap) -> Response {
    let meta = Meta::from(&headers);
    let shared = app.0.lock().expect("state lock");
    let out = match shared.project.engine().gate_status() {
        Some(g) => meta.ok(json!({ "passes": g.passes(), "status": g })),
        None => meta.app_error(&EngineError::NoOpenIteration.into()),
    };
    reply(out)
}

async fn integrity(State(app): State<AppState>, headers: HeaderMap) -> Response {
    with_state(&app, &headers, |m, st| m.ok(integrity_check(st)))
}

async fn trace_back(State(app): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    with_state(&app, &headers, |m, st| match back_trace(st, &EntityId::parse(id)) {
        Ok(found) => m.ok(found),
        Err(e) => m.app_error(&e.into()),
    })
}

async fn trace_impact(State(app): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    with_state(&app, &headers, |m, st| match impact_of(st, &EntityId::parse(id)) {
        Ok(report) => m.ok(report),
        Err(e) => m.app_error(&e.into()),
    })
}

fn field_for(collection: &str) -> Option<&'static str> {
    COLLECTIONS.iter().find(|(path, _)| *path == collection).map(|(_, field)| *field)
}

async fn collection(State(app): State<AppState>, Path(name): Path<String>, headers: HeaderMap) -> Response {
    with_state(&app, &headers, |m, st| {
        let Some(field) = field_for(&name) else {
            return m.plain_error(StatusCode::NOT_FOUND, "UnknownCollection", format!("no collection {name:?}"));
        };
        let whole = serde_json::to_value(st).expect("state serializes");
        let items = match whole.get(field) {
            Some(Value::Object(map)) => map.values().cloned().collect(),
            Some(Value::Array(items)) => items.clone(),
            _ => Vec::new(),
        };
        m.ok(items)
    })
}

async fn entity(
    State(app): State<AppState>,
    Path((name, id)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    with_state(&app, &headers, |m, st| {
        if field_for(&name).is_none() {
            return m.plain_error(StatusCode::NOT_FOUND, "UnknownCollection", format!("no collection {name:?}"));
        }
        match st.entity_json(&EntityId::parse(id.clone())) {
            Some(doc) => m.ok(doc),
            None => m.plain_error(StatusCode::NOT_FOUND, "UnknownEntity", format!("no entity {id}")),
        }
    })
}
