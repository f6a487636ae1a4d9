use std::sync::Arc;

use axum::extract::multipart::MultipartError;
use axum::extract::rejection::QueryRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rpys_core::export::write_table_csv;
use rpys_core::index::{SearchHits, SortDirection, SortKey};
use rpys_core::{Mode, ParseReport, YearRange};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::config::ServiceConfig;
use crate::session::{analyze, Analysis, AnalyzeError, Session, SessionId, SessionStore};

// Room for multipart boundaries and part headers on top of the file itself.
const MULTIPART_SLACK: u64 = 64 * 1024;

pub struct AppState {
    pub config: ServiceConfig,
    pub sessions: SessionStore,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        let sessions = SessionStore::new(config.session_ttl);
        Arc::new(AppState { config, sessions })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<ParseReport>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    detail: String,
    report: Option<ParseReport>,
}

impl ApiError {
    fn new(status: StatusCode, detail: impl Into<String>) -> Self {
        ApiError { status, detail: detail.into(), report: None }
    }

    fn bad_request(detail: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, detail.to_string())
    }

    fn not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "no such session")
    }

    fn too_large(limit: u64) -> Self {
        Self::new(StatusCode::PAYLOAD_TOO_LARGE, format!("upload exceeds the limit of {limit} bytes"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let error = match self.status {
            StatusCode::BAD_REQUEST => "bad_request",
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            StatusCode::PAYLOAD_TOO_LARGE => "payload_too_large",
            StatusCode::UNPROCESSABLE_ENTITY => "unprocessable",
            _ => "internal",
        };
        (self.status, Json(ErrorBody { error, detail: self.detail, report: self.report }))
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    let body_limit = usize::try_from(state.config.max_upload_bytes.saturating_add(MULTIPART_SLACK))
        .unwrap_or(usize::MAX);
    let api = Router::new()
        .route("/api/sessions", post(create_session).layer(DefaultBodyLimit::max(body_limit)))
        .route("/api/sessions/{id}", axum::routing::delete(delete_session))
        .route("/api/sessions/{id}/spectrogram", get(spectrogram))
        .route("/api/sessions/{id}/heatmap", get(heatmap))
        .route("/api/sessions/{id}/table", get(table))
        .route("/api/metrics", get(metrics));
    let api = match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.with_state(state)
}

#[derive(Debug, Deserialize)]
struct CreateParams {
    mode: Option<String>,
    from: Option<u16>,
    to: Option<u16>,
}

fn parse_range(from: Option<u16>, to: Option<u16>) -> ApiResult<YearRange> {
    let default = YearRange::default();
    YearRange::new(from.unwrap_or(default.first()), to.unwrap_or(default.last()))
        .map_err(ApiError::bad_request)
}

fn multipart_error(err: MultipartError, limit: u64) -> ApiError {
    if err.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::too_large(limit)
    } else {
        ApiError::bad_request(err.body_text())
    }
}

async fn read_upload(multipart: &mut Multipart, limit: u64) -> ApiResult<Vec<u8>> {
    let mut upload = None;
    while let Some(mut field) = multipart.next_field().await.map_err(|e| multipart_error(e, limit))? {
        if field.name() != Some("file") || upload.is_some() {
            while field.chunk().await.map_err(|e| multipart_error(e, limit))?.is_some() {}
            continue;
        }
        let mut buf = Vec::new();
        while let Some(chunk) = field.chunk().await.map_err(|e| multipart_error(e, limit))? {
            if (buf.len() + chunk.len()) as u64 > limit {
                buf.fill(0);
                return Err(ApiError::too_large(limit));
            }
            buf.extend_from_slice(&chunk);
        }
        upload = Some(buf);
    }
    upload.ok_or_else(|| ApiError::bad_request("missing multipart field \"file\""))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    params: Result<Query<CreateParams>, QueryRejection>,
    mut multipart: Multipart,
) -> ApiResult<(StatusCode, Json<crate::session::SessionSummary>)> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let mode = match params.mode.as_deref() {
        None => Mode::Standard,
        Some(m) => m.parse().map_err(ApiError::bad_request)?,
    };
    let range = parse_range(params.from, params.to)?;
    let limit = state.config.max_upload_bytes;
    let upload = read_upload(&mut multipart, limit).await?;

    let analyzed = tokio::task::spawn_blocking(move || analyze(upload, mode, range, limit))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    match analyzed {
        Ok(session) => {
            let session = state.sessions.insert(session);
            tracing::info!(id = %session.id, mode = %session.mode, "session created");
            Ok((StatusCode::CREATED, Json(session.summary())))
        }
        Err(AnalyzeError::TooLarge { limit }) => Err(ApiError::too_large(limit)),
        Err(AnalyzeError::NoRecords(report)) => Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            detail: "no records found in upload".into(),
            report: Some(report),
        }),
    }
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    SessionId::parse(id).and_then(|id| state.sessions.get(id)).ok_or_else(ApiError::not_found)
}

fn wrong_mode(session: &Session) -> ApiError {
    ApiError::new(StatusCode::CONFLICT, format!("session was created in {} mode", session.mode))
}

async fn spectrogram(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    match &session.analysis {
        Analysis::Standard(table) => Ok(Json(table).into_response()),
        Analysis::Multi(_) => Err(wrong_mode(&session)),
    }
}

async fn heatmap(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    match &session.analysis {
        Analysis::Multi(table) => Ok(Json(table).into_response()),
        Analysis::Standard(_) => Err(wrong_mode(&session)),
    }
}

#[derive(Debug, Deserialize)]
struct TableParams {
    q: Option<String>,
    sort: Option<String>,
    dir: Option<String>,
    limit: Option<usize>,
    format: Option<String>,
}

async fn table(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    params: Result<Query<TableParams>, QueryRejection>,
) -> ApiResult<Response> {
    let session = lookup(&state, &id)?;
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let max = state.config.max_table_rows;
    let limit = match params.limit {
        Some(0) => return Err(ApiError::bad_request("limit must be positive")),
        Some(n) => n.min(max),
        None => max,
    };
    let sort_key: SortKey = match params.sort.as_deref() {
        None | Some("") => SortKey::default(),
        Some(s) => s.parse().map_err(ApiError::bad_request)?,
    };
    let direction: SortDirection = match params.dir.as_deref() {
        None | Some("") => SortDirection::default(),
        Some(d) => d.parse().map_err(ApiError::bad_request)?,
    };
    let query = rpys_core::Query::new(params.q.as_deref().unwrap_or(""))
        .sorted(sort_key, direction)
        .with_limit(Some(limit));
    let hits: SearchHits<'_> = session.index.search(&query);
    match params.format.as_deref() {
        None | Some("json") => Ok(Json(hits).into_response()),
        Some("csv") => {
            let mut out = Vec::new();
            write_table_csv(&mut out, &hits, session.mode)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            Ok(([(axum::http::header::CONTENT_TYPE, "text/csv; charset=utf-8")], out).into_response())
        }
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}, expected json or csv"))),
    }
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> StatusCode {
    if let Some(id) = SessionId::parse(&id) {
        state.sessions.remove(id);
    }
    StatusCode::NO_CONTENT
}

#[derive(Serialize)]
struct Metrics {
    sessions: usize,
}

async fn metrics(State(state): State<Arc<AppState>>) -> Json<Metrics> {
    Json(Metrics { sessions: state.session_count() })
}
