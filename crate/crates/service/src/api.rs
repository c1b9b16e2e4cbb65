//! HTTP surface of the control plane.

use std::convert::Infallible;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::Deserialize;
use serde_json::{json, Value};
use smartcook_core::doneness::{CategoryId, DonenessTable, KbError};
use smartcook_core::predictor::Prediction;
use tokio::sync::{broadcast, watch};
use tower_http::services::ServeDir;

use crate::gateway::{Gateway, SpeechRequest};
use crate::hub::{Hub, HubError, HubEvent};
use crate::registry::TokenRegistry;
use crate::session::{AlarmMode, SessionError};
use crate::speech;

#[derive(Clone)]
pub struct AppState {
    pub hub: Arc<Hub>,
    pub tokens: Arc<TokenRegistry>,
    pub kb: Arc<DonenessTable>,
    pub gateway: Arc<Gateway>,
    /// Flips to true on shutdown so open event streams end.
    pub shutdown: watch::Receiver<bool>,
}

pub fn router(state: AppState, ui_dir: Option<&Path>) -> Router {
    let mut app = Router::new()
        .route("/api/devices", get(list_devices))
        .route("/api/devices/{id}/temperature", get(temperature))
        .route("/api/devices/{id}/target", get(get_target).post(set_target))
        .route("/api/devices/{id}/prediction", get(prediction))
        .route("/api/devices/{id}/alarm", post(arm_alarm))
        .route("/api/devices/{id}/history", get(history))
        .route("/api/devices/{id}/stream", get(stream))
        .route("/api/whoami", get(whoami))
        .route("/api/kb", get(kb_table))
        .route("/api/kb/classify", get(kb_classify))
        .route("/api/kb/target_range", get(kb_target_range))
        .route("/api/assistant/utterance", post(utterance))
        .route("/NewHotStuff/Aimtemp", get(legacy_aimtemp));
    if let Some(dir) = ui_dir {
        app = app.nest_service("/ui", ServeDir::new(dir));
    }
    app.with_state(state)
}

pub struct ApiError(StatusCode, Value);

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError(status, json!({ "error": message.into() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<HubError> for ApiError {
    fn from(e: HubError) -> Self {
        let status = match &e {
            HubError::UnknownDevice(_) => StatusCode::NOT_FOUND,
            HubError::Session(SessionError::OutOfRange(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            HubError::Session(SessionError::NoTarget) => StatusCode::CONFLICT,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<KbError> for ApiError {
    fn from(e: KbError) -> Self {
        let status = match &e {
            KbError::UnknownDoneness { .. } => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

type ApiResult = Result<Response, ApiError>;

pub fn prediction_json(p: &Prediction) -> Value {
    match p {
        Prediction::Eta {
            seconds_remaining,
            rate_f_per_s,
        } => json!({
            "kind": "eta",
            "seconds": (seconds_remaining * 1000.0).round() / 1000.0,
            "minutes": p.minutes(),
            "rate_f_per_s": rate_f_per_s,
        }),
        Prediction::Indeterminate => json!({ "kind": "indeterminate" }),
        Prediction::AlreadyAtTarget => json!({ "kind": "at_target" }),
    }
}

async fn list_devices(State(st): State<AppState>) -> Json<Value> {
    Json(json!({ "devices": st.hub.devices() }))
}

async fn temperature(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    Ok(match st.hub.current_temperature(&id)? {
        Some(r) => Json(json!({
            "device_id": id,
            "temp_f": r.temp_f,
            "t_ms": r.t_ms,
            "stale": r.stale,
        }))
        .into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn get_target(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    Ok(Json(st.hub.target(&id)?).into_response())
}

#[derive(Deserialize)]
struct TargetBody {
    temp_f: f64,
}

async fn set_target(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<TargetBody>,
) -> ApiResult {
    Ok(Json(st.hub.set_target(&id, body.temp_f)?).into_response())
}

async fn prediction(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    Ok(Json(prediction_json(&st.hub.prediction(&id)?)).into_response())
}

async fn arm_alarm(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(mode): Json<AlarmMode>,
) -> ApiResult {
    let threshold = st.hub.arm_alarm(&id, mode)?;
    let mut body = serde_json::to_value(mode).expect("alarm mode serializes");
    body["armed"] = json!(true);
    body["threshold_f"] = json!(threshold);
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
struct HistoryQuery {
    #[serde(default)]
    since_ms: u64,
}

async fn history(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<HistoryQuery>,
) -> ApiResult {
    Ok(Json(json!({ "samples": st.hub.history(&id, q.since_ms)? })).into_response())
}

async fn stream(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult {
    // Subscribe before the existence check so nothing slips between them.
    let events = st.hub.subscribe();
    st.hub.target(&id)?;
    Ok(Sse::new(device_events(id, events, st.shutdown.clone()))
        .keep_alive(KeepAlive::default())
        .into_response())
}

fn device_events(
    device_id: String,
    events: broadcast::Receiver<HubEvent>,
    shutdown: watch::Receiver<bool>,
) -> impl Stream<Item = Result<Event, Infallible>> {
    stream::unfold(
        (events, shutdown),
        move |(mut events, mut shutdown)| {
            let device_id = device_id.clone();
            async move {
                loop {
                    if *shutdown.borrow() {
                        return None;
                    }
                    let ev = tokio::select! {
                        ev = events.recv() => ev,
                        _ = shutdown.changed() => return None,
                    };
                    let ev = match ev {
                        Ok(ev) => ev,
                        Err(broadcast::error::RecvError::Lagged(n)) => {
                            tracing::debug!("event stream lagged by {n}");
                            continue;
                        }
                        Err(broadcast::error::RecvError::Closed) => return None,
                    };
                    if ev.device_id() != device_id {
                        continue;
                    }
                    let out = match &ev {
                        HubEvent::Sample(s) => Event::default().event("sample").json_data(s),
                        HubEvent::Alarm(a) => Event::default().event("alarm").json_data(a),
                        _ => continue,
                    };
                    match out {
                        Ok(out) => return Some((Ok(out), (events, shutdown))),
                        Err(e) => tracing::warn!("unencodable event: {e}"),
                    }
                }
            }
        },
    )
}

#[derive(Deserialize)]
struct TokenQuery {
    #[serde(default)]
    token: String,
}

async fn whoami(State(st): State<AppState>, Query(q): Query<TokenQuery>) -> ApiResult {
    match st.tokens.resolve(&q.token) {
        Ok(device) => Ok(Json(json!({ "device_id": device })).into_response()),
        Err(_) => Err(ApiError::new(StatusCode::UNAUTHORIZED, "unknown token")),
    }
}

async fn kb_table(State(st): State<AppState>) -> Json<Value> {
    Json(json!({
        "categories": st.kb.categories(),
        "entries": st.kb.entries(),
    }))
}

fn parse_category(raw: &str) -> Result<CategoryId, ApiError> {
    raw.parse::<CategoryId>()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))
}

#[derive(Deserialize)]
struct ClassifyQuery {
    category: String,
    temp_f: f64,
}

async fn kb_classify(State(st): State<AppState>, Query(q): Query<ClassifyQuery>) -> ApiResult {
    let id = parse_category(&q.category)?;
    let entry = st.kb.classify(id, q.temp_f)?.entry();
    Ok(Json(json!({
        "category": id,
        "temp_f": q.temp_f,
        "below_range": entry.is_none(),
        "entry": entry,
        "usda_minimum_f": st.kb.usda_minimum(id)?,
    }))
    .into_response())
}

#[derive(Deserialize)]
struct RangeQuery {
    category: String,
    doneness: String,
}

async fn kb_target_range(State(st): State<AppState>, Query(q): Query<RangeQuery>) -> ApiResult {
    let id = parse_category(&q.category)?;
    let entry = st.kb.lookup(id, &q.doneness)?;
    Ok(Json(json!({
        "category": id,
        "doneness": entry.name,
        "lower_f": entry.lower_f,
        "upper_f": entry.upper_f,
        "usda_minimum_f": st.kb.usda_minimum(id)?,
    }))
    .into_response())
}

async fn utterance(State(st): State<AppState>, Json(req): Json<SpeechRequest>) -> Response {
    Json(st.gateway.handle(&req).await).into_response()
}

/// The original single-endpoint API, kept for old clients.
async fn legacy_aimtemp(State(st): State<AppState>, Query(q): Query<TokenQuery>) -> ApiResult {
    let device = st
        .tokens
        .resolve(&q.token)
        .map_err(|_| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))?;
    let message = match st.hub.current_temperature(device) {
        Ok(Some(r)) => format!(
            "Your food is currently at {} degrees Fahrenheit.",
            speech::spoken_degrees(r.temp_f)
        ),
        Ok(None) | Err(HubError::UnknownDevice(_)) => speech::NO_READING.to_string(),
        Err(e) => return Err(e.into()),
    };
    Ok(Json(json!({ "message": message })).into_response())
}
