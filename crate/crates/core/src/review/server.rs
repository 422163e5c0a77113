//! JSON API over one project directory. Mutations go through a single
//! writer lock and are on disk before the response is sent.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::Deserialize;
use thiserror::Error;
use tokio::sync::{oneshot, RwLock};
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use super::report;
use super::{
    aggregate_metrics, Category, ProjectHandle, ProjectStore, ReviewError, StoreError,
    TestCaseStatus,
};
use crate::redundancy::{RedundancyError, ValidationVerdict};

const PLACEHOLDER_INDEX: &str = r#"<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>specforge review</title></head>
<body>
<h1>specforge review service</h1>
<p>No UI assets were supplied. Start with <code>--assets DIR</code> to serve a built UI.</p>
<ul>
<li><a href="/api/project">/api/project</a></li>
<li><a href="/api/testcases?status=pending">/api/testcases?status=pending</a></li>
<li><a href="/api/redundancy/flags">/api/redundancy/flags</a></li>
<li><a href="/api/metrics">/api/metrics</a></li>
<li><a href="/api/alignment">/api/alignment</a></li>
</ul>
</body>
</html>
"#;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("PortInUse: port {0} is already bound")]
    PortInUse(u16),
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            ServeError::PortInUse(_) => "PortInUse",
            ServeError::Store(e) => e.code(),
            ServeError::Io(_) => "IoError",
        }
    }
}

type Shared = Arc<RwLock<ProjectHandle>>;

/// A running service. Dropping the handle does not stop it; call
/// [`ServiceHandle::shutdown`].
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(std::io::Error::other)?
    }

    /// Resolves when the server exits on its own.
    pub async fn wait(self) -> std::io::Result<()> {
        let ServiceHandle { stop, task, .. } = self;
        let out = task.await.map_err(std::io::Error::other)?;
        drop(stop);
        out
    }
}

/// Loads the project and starts serving on `127.0.0.1:port` (0 picks a free
/// port). `assets` replaces the built-in index page with a static directory.
pub async fn serve_api(
    store: ProjectStore,
    port: u16,
    assets: Option<PathBuf>,
) -> Result<ServiceHandle, ServeError> {
    let handle = ProjectHandle::open(store)?;
    let listener = match tokio::net::TcpListener::bind(("127.0.0.1", port)).await {
        Ok(l) => l,
        Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
            return Err(ServeError::PortInUse(port))
        }
        Err(e) => return Err(e.into()),
    };
    let addr = listener.local_addr()?;
    let app = router(Arc::new(RwLock::new(handle)), assets);
    let (stop, stopped) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = stopped.await;
            })
            .await
    });
    tracing::info!(%addr, "review service listening");
    Ok(ServiceHandle {
        addr,
        stop: Some(stop),
        task,
    })
}

pub fn router(state: Shared, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/project", get(project))
        .route("/api/testcases", get(testcases))
        .route("/api/testcases/{tc_id}/verdict", post(verdict))
        .route("/api/missed", post(missed))
        .route("/api/redundancy/flags", get(flags).post(developer_flag))
        .route("/api/redundancy/flags/{flag_id}/validate", post(validate))
        .route("/api/metrics", get(metrics))
        .route("/api/alignment", get(alignment))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_INDEX) })),
    }
}

struct ApiError(ReviewError);

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ReviewError::UnknownTestCase(_)
            | ReviewError::Redundancy(RedundancyError::UnknownFlag(_)) => StatusCode::NOT_FOUND,
            ReviewError::UnknownCategory(_)
            | ReviewError::EmptyDescription
            | ReviewError::Redundancy(RedundancyError::Prompt(_)) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ReviewError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::CONFLICT,
        };
        let body = serde_json::json!({ "error": self.0.code(), "message": self.0.to_string() });
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
struct StatusQuery {
    status: Option<String>,
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

#[derive(Debug, Deserialize)]
struct VerdictBody {
    category: String,
    reviewer: String,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct MissedBody {
    description: String,
    reviewer: String,
}

#[derive(Debug, Deserialize)]
struct ValidateBody {
    verdict: ValidationVerdict,
    #[serde(default = "default_reviewer")]
    reviewer: String,
}

#[derive(Debug, Deserialize)]
struct DeveloperFlagBody {
    member_ids: Vec<String>,
    #[serde(default)]
    rationale: String,
}

fn default_reviewer() -> String {
    "reviewer".to_string()
}

fn formatted(format: Option<&str>, json: serde_json::Value, csv: String, text: String) -> Response {
    match format {
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response(),
        Some("table") | Some("text") => {
            ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response()
        }
        _ => Json(json).into_response(),
    }
}

async fn project(State(s): State<Shared>) -> impl IntoResponse {
    Json(s.read().await.project().summary())
}

async fn testcases(State(s): State<Shared>, Query(q): Query<StatusQuery>) -> ApiResult<Response> {
    let status = match q.status.as_deref() {
        None => TestCaseStatus::All,
        Some(raw) => match raw.parse() {
            Ok(st) => st,
            Err(message) => {
                let body = serde_json::json!({ "error": "InvalidStatus", "message": message });
                return Ok((StatusCode::BAD_REQUEST, Json(body)).into_response());
            }
        },
    };
    Ok(Json(s.read().await.project().test_cases(status)?).into_response())
}

async fn verdict(
    State(s): State<Shared>,
    Path(tc_id): Path<String>,
    Json(body): Json<VerdictBody>,
) -> ApiResult<impl IntoResponse> {
    let category: Category = body.category.parse()?;
    let mut guard = s.write().await;
    let v = guard.submit_verdict(&tc_id, category, &body.reviewer, body.tags, Utc::now())?;
    Ok((StatusCode::CREATED, Json(v)))
}

async fn missed(
    State(s): State<Shared>,
    Json(body): Json<MissedBody>,
) -> ApiResult<impl IntoResponse> {
    let m = s
        .write()
        .await
        .record_missed(&body.description, &body.reviewer, Utc::now())?;
    Ok((StatusCode::CREATED, Json(m)))
}

async fn flags(State(s): State<Shared>) -> impl IntoResponse {
    Json(s.read().await.project().redundancy.flags.clone())
}

async fn developer_flag(
    State(s): State<Shared>,
    Json(body): Json<DeveloperFlagBody>,
) -> ApiResult<impl IntoResponse> {
    let f = s
        .write()
        .await
        .add_developer_flag(body.member_ids, &body.rationale)?;
    Ok((StatusCode::CREATED, Json(f)))
}

async fn validate(
    State(s): State<Shared>,
    Path(flag_id): Path<String>,
    Json(body): Json<ValidateBody>,
) -> ApiResult<impl IntoResponse> {
    let f = s
        .write()
        .await
        .validate_flag(&flag_id, body.verdict, &body.reviewer, Utc::now())?;
    Ok(Json(f))
}

async fn metrics(State(s): State<Shared>, Query(q): Query<FormatQuery>) -> ApiResult<Response> {
    let m = s.read().await.project().metrics()?;
    let report = aggregate_metrics(&[m])?;
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok(formatted(
        q.format.as_deref(),
        json,
        report::metrics_csv(&report),
        report::metrics_text(&report),
    ))
}

async fn alignment(State(s): State<Shared>, Query(q): Query<FormatQuery>) -> ApiResult<Response> {
    let a = s.read().await.project().alignment()?;
    let json = serde_json::to_value(&a).expect("report serializes");
    Ok(formatted(
        q.format.as_deref(),
        json,
        report::alignment_csv(&a),
        report::alignment_text(&a),
    ))
}
