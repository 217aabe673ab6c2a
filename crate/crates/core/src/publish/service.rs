//! The HTTP service: one process exposing per-functional-group routes.
//!
//! ```text
//! GET  /health
//! POST /ingest/sensor        text/csv or application/json reading array
//! POST /ingest/ik            one IK observation object
//! POST /control/flush?t=N
//! POST /control/reason
//! GET  /events/composite?since=N
//! GET  /recommendations
//! POST /query/sparql         query text
//! ```
//!
//! Every response body is JSON; errors use the ApiError shape. Ingestion is
//! atomic per request: a batch with one invalid row is rejected whole and
//! leaves no state behind.

use crate::config::Config;
use crate::ingest::{parse_ik_json, parse_sensor_csv, IngestError, SensorBatch};
use crate::model::{SensorReading, Timestamp};
use crate::ontology::QueryError;
use crate::pipeline::{Pipeline, PipelineError};
use crate::publish::wire::{CompositeEventDto, ReadingDto, RecommendationDto};
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

/// Machine-readable error envelope returned by every failing route.
#[derive(Debug, Clone, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<IngestError> for ApiError {
    fn from(err: IngestError) -> Self {
        ApiError::unprocessable("ingest.invalid", err.to_string())
    }
}

impl From<QueryError> for ApiError {
    fn from(err: QueryError) -> Self {
        match err {
            QueryError::SyntaxError { .. } => ApiError::bad_request("sparql.syntax", err.to_string()),
            QueryError::UnboundProjection(_) => {
                ApiError::bad_request("sparql.unbound", err.to_string())
            }
        }
    }
}

struct ServiceState {
    pipeline: RwLock<Pipeline>,
    config: Config,
}

impl ServiceState {
    /// Runs a mutation under the write lock, then persists the stores.
    fn mutate<T>(&self, f: impl FnOnce(&mut Pipeline) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut pipeline = self.pipeline.write().expect("pipeline lock never poisoned");
        let value = f(&mut pipeline)?;
        pipeline
            .persist(&self.config)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(value)
    }
}

type AppState = Arc<ServiceState>;

/// A running service; dropping the handle does not stop it, call
/// [`ServiceHandle::shutdown`].
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    task: JoinHandle<Result<(), std::io::Error>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections, drains in-flight requests, then returns.
    pub async fn shutdown(self) {
        let _ = self.shutdown.send(());
        let _ = self.task.await;
    }

    /// Waits until the server exits (via [`ServiceHandle::shutdown`] from
    /// another task, or a transport error).
    pub async fn wait(self) -> Result<(), std::io::Error> {
        self.task.await.expect("server task never panics")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port {0} in use")]
    PortInUse(u16),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Builds the pipeline from the config and binds the service on
/// `127.0.0.1:port`. Port 0 picks a free port; see
/// [`ServiceHandle::addr`] for the actual address.
pub async fn serve(config: Config) -> Result<ServiceHandle, ServeError> {
    let pipeline = Pipeline::from_config(&config)?;
    std::fs::create_dir_all(&config.data_dir)?;
    let state: AppState = Arc::new(ServiceState {
        pipeline: RwLock::new(pipeline),
        config: config.clone(),
    });

    let app = Router::new()
        .route("/health", get(health))
        .route("/ingest/sensor", post(ingest_sensor))
        .route("/ingest/ik", post(ingest_ik))
        .route("/control/flush", post(control_flush))
        .route("/control/reason", post(control_reason))
        .route("/events/composite", get(events_composite))
        .route("/recommendations", get(recommendations))
        .route("/query/sparql", post(query_sparql))
        .fallback(not_found)
        .with_state(state);

    let listener = TcpListener::bind(("127.0.0.1", config.port))
        .await
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::AddrInUse => ServeError::PortInUse(config.port),
            _ => ServeError::Io(e),
        })?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServiceHandle {
        addr,
        shutdown: tx,
        task,
    })
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn ingest_sensor(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: String,
) -> Result<Response, ApiError> {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("text/csv");
    let batch = if content_type.starts_with("application/json") {
        let dtos: Vec<ReadingDto> = serde_json::from_str(&body)
            .map_err(|e| ApiError::unprocessable("ingest.invalid", e.to_string()))?;
        let readings = dtos
            .into_iter()
            .map(SensorReading::try_from)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ApiError::unprocessable("ingest.invalid", e.to_string()))?;
        SensorBatch::new(readings)
    } else if content_type.starts_with("text/csv") {
        parse_sensor_csv(&body)?
    } else {
        return Err(ApiError::bad_request(
            "ingest.content_type",
            format!("unsupported content type `{content_type}`"),
        ));
    };

    let accepted = state.mutate(|pipeline| {
        pipeline
            .ingest_batch(batch)
            .map_err(|e| ApiError::unprocessable("ingest.order", e.to_string()))
    })?;
    Ok((
        StatusCode::ACCEPTED,
        Json(serde_json::json!({"accepted": accepted})),
    )
        .into_response())
}

async fn ingest_ik(
    State(state): State<AppState>,
    body: String,
) -> Result<Response, ApiError> {
    let observation = parse_ik_json(&body)?;
    state.mutate(|pipeline| {
        pipeline.ingest_ik(observation);
        Ok(())
    })?;
    Ok((
        StatusCode::ACCEPTED,
        Json(serde_json::json!({"accepted": 1})),
    )
        .into_response())
}

#[derive(Deserialize)]
struct FlushParams {
    t: Option<u64>,
}

async fn control_flush(
    State(state): State<AppState>,
    Query(params): Query<FlushParams>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let t = params
        .t
        .ok_or_else(|| ApiError::bad_request("params.invalid", "missing query parameter `t`"))?;
    let events = state.mutate(|pipeline| Ok(pipeline.flush(Timestamp::from_secs(t))))?;
    Ok(Json(serde_json::json!({"events": events})))
}

async fn control_reason(
    State(state): State<AppState>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let count = state.mutate(|pipeline| Ok(pipeline.reason()))?;
    Ok(Json(serde_json::json!({"recommendations": count})))
}

#[derive(Deserialize)]
struct SinceParams {
    since: Option<u64>,
}

async fn events_composite(
    State(state): State<AppState>,
    Query(params): Query<SinceParams>,
) -> Json<Vec<CompositeEventDto>> {
    let pipeline = state.pipeline.read().expect("pipeline lock never poisoned");
    let events = pipeline
        .events_since(params.since.map(Timestamp::from_secs))
        .into_iter()
        .map(CompositeEventDto::from)
        .collect();
    Json(events)
}

async fn recommendations(State(state): State<AppState>) -> Json<Vec<RecommendationDto>> {
    let pipeline = state.pipeline.read().expect("pipeline lock never poisoned");
    Json(
        pipeline
            .recommendations()
            .iter()
            .map(RecommendationDto::from)
            .collect(),
    )
}

#[derive(Serialize)]
struct QueryResponse {
    vars: Vec<String>,
    rows: Vec<Vec<String>>,
}

async fn query_sparql(
    State(state): State<AppState>,
    body: String,
) -> Result<Json<QueryResponse>, ApiError> {
    let pipeline = state.pipeline.read().expect("pipeline lock never poisoned");
    let table = pipeline.query(&body)?;
    Ok(Json(QueryResponse {
        vars: table.vars.clone(),
        rows: table.rendered_rows(),
    }))
}
