//! HTTP facade over the confounding-interval engine.
//!
//! Every compute endpoint accepts inline `stats`, so a fresh server answers
//! any fully specified request. Uploading a CSV to `/v1/stats` additionally
//! caches its statistics under a session id that later requests may cite
//! instead. Response bodies are produced by the same renderers the command
//! line uses, byte for byte.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use confint_core::api::{self, IntervalQuery, RegionQuery, SurfaceQuery};
use confint_core::export::to_json;
use confint_core::{ErrorKind, PrepareOptions, PrepareReport, Roles, SufficientStats};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use uuid::Uuid;

/// Largest surface resolution served; keeps a request within seconds.
pub const MAX_RESOLUTION: usize = 201;
const MAX_UPLOAD_BYTES: usize = 64 << 20;

/// Statistics cached for one uploaded dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub session: Uuid,
    pub stats: SufficientStats,
    pub label: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub report: PrepareReport,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<Uuid, SessionStats>>>,
}

impl AppState {
    fn insert(&self, entry: SessionStats) {
        self.sessions
            .write()
            .expect("session cache poisoned")
            .insert(entry.session, entry);
    }

    fn get(&self, id: &Uuid) -> Option<SessionStats> {
        self.sessions
            .read()
            .expect("session cache poisoned")
            .get(id)
            .cloned()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session cache poisoned").len()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<confint_core::Error> for ApiError {
    fn from(e: confint_core::Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Input => StatusCode::BAD_REQUEST,
            ErrorKind::Data | ErrorKind::Bounds => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = to_json(&serde_json::json!({ "error": self.message }));
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            body,
        )
            .into_response()
    }
}

fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

/// Where a request's statistics come from: inline, or a cached session.
#[derive(Deserialize)]
struct Source {
    #[serde(default)]
    stats: Option<SufficientStats>,
    #[serde(default)]
    session: Option<Uuid>,
}

#[derive(Deserialize)]
struct Request<Q> {
    #[serde(flatten)]
    source: Source,
    #[serde(flatten)]
    query: Q,
}

impl AppState {
    fn resolve(&self, source: &Source) -> Result<SufficientStats, ApiError> {
        match (source.stats, source.session) {
            (Some(stats), None) => Ok(stats),
            (None, Some(id)) => self.get(&id).map(|s| s.stats).ok_or_else(|| {
                ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id}"))
            }),
            (Some(_), Some(_)) => Err(ApiError::bad_request(
                "give either 'stats' or 'session', not both",
            )),
            (None, None) => Err(ApiError::bad_request("request needs 'stats' or 'session'")),
        }
    }
}

type Renderer<Q> = fn(&SufficientStats, &Q) -> confint_core::Result<String>;

async fn compute<Q>(state: AppState, body: Bytes, render: Renderer<Q>) -> Result<Response, ApiError>
where
    Q: DeserializeOwned + Send + 'static,
{
    let req: Request<Q> = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("request body: {e}")))?;
    let stats = state.resolve(&req.source)?;
    let out = tokio::task::spawn_blocking(move || render(&stats, &req.query))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(json_body(out))
}

fn check_resolution(resolution: usize) -> confint_core::Result<()> {
    if resolution > MAX_RESOLUTION {
        return Err(confint_core::Error::Input(format!(
            "resolution {resolution} exceeds the service limit of {MAX_RESOLUTION}"
        )));
    }
    Ok(())
}

fn render_surface(stats: &SufficientStats, q: &SurfaceQuery) -> confint_core::Result<String> {
    check_resolution(q.resolution)?;
    api::render_surface(stats, q)
}

fn render_region(stats: &SufficientStats, q: &RegionQuery) -> confint_core::Result<String> {
    check_resolution(q.surface.resolution)?;
    api::render_region(stats, q)
}

async fn health() -> Response {
    json_body(to_json(&serde_json::json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
    })))
}

async fn interval(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    compute::<IntervalQuery>(state, body, api::render_interval).await
}

async fn surface(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    compute::<SurfaceQuery>(state, body, render_surface).await
}

async fn region(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    compute::<RegionQuery>(state, body, render_region).await
}

/// Multipart upload: `file` (CSV), `roles` (JSON), and optionally `options`
/// (JSON) and `label` (text).
async fn upload_stats(
    State(state): State<AppState>,
    mut form: Multipart,
) -> Result<Response, ApiError> {
    let (mut csv, mut roles, mut options, mut label) =
        (None, None, PrepareOptions::default(), None);
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(format!("multipart: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_owned();
        let text = field
            .text()
            .await
            .map_err(|e| ApiError::bad_request(format!("field '{name}': {e}")))?;
        match name.as_str() {
            "file" => csv = Some(text),
            "roles" => {
                roles = Some(
                    serde_json::from_str::<Roles>(&text)
                        .map_err(|e| ApiError::bad_request(format!("field 'roles': {e}")))?,
                )
            }
            "options" => {
                options = serde_json::from_str(&text)
                    .map_err(|e| ApiError::bad_request(format!("field 'options': {e}")))?
            }
            "label" => label = Some(text),
            other => return Err(ApiError::bad_request(format!("unexpected field '{other}'"))),
        }
    }
    let csv = csv.ok_or_else(|| ApiError::bad_request("missing field 'file'"))?;
    let roles = roles.ok_or_else(|| ApiError::bad_request("missing field 'roles'"))?;
    let label = label.unwrap_or_else(|| {
        let mut l = format!("{} ~ {}", roles.y, roles.x);
        if !roles.w.is_empty() {
            l.push_str(&format!(" | {}", roles.w.join(", ")));
        }
        l
    });
    let (stats, report) =
        tokio::task::spawn_blocking(move || api::stats_from_csv(&csv, &roles, &options))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let entry = SessionStats {
        session: Uuid::new_v4(),
        stats,
        label,
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        report,
    };
    state.insert(entry.clone());
    Ok(json_body(to_json(&entry)))
}

async fn session(
    State(state): State<AppState>,
    Path(id): Path<Uuid>,
) -> Result<Response, ApiError> {
    state
        .get(&id)
        .map(|s| json_body(to_json(&s)))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id}")))
}

pub fn router() -> Router {
    router_with_state(AppState::default())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/stats", post(upload_stats))
        .route("/v1/stats/{id}", get(session))
        .route("/v1/interval", post(interval))
        .route("/v1/surface", post(surface))
        .route("/v1/region", post(region))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(CorsLayer::permissive())
        .with_state(state)
}
