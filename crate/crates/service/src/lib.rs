//! HTTP query service over an immutable [`FactBase`].
//!
//! Every response body is canonical JSON produced by the same renderers the
//! CLI uses, so a query answered here and on the command line yields the
//! same bytes. Domain errors map to 400/404/409 with a machine-readable
//! `{"error":{"code","message"}}` body; a query that outlives the configured
//! timeout gets a 503.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use thiserror::Error;
use tower_http::cors::CorsLayer;
use tracelens_core::catalog;
use tracelens_core::error::error_json;
use tracelens_core::{
    load_facts, render_json, ErrorBody, FactBase, LoadError, QueryError, QueryRequest,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Origin allowed to call the API from a browser, e.g. the UI's dev server.
    pub allow_origin: Option<String>,
    pub timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            allow_origin: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("invalid allowed origin {0:?}")]
    InvalidOrigin(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn body(&self) -> ErrorBody {
        match self {
            ServeError::Load(e) => ErrorBody::from(e),
            ServeError::InvalidOrigin(_) => ErrorBody {
                code: "bad_request",
                message: self.to_string(),
            },
            ServeError::Bind { .. } | ServeError::Io(_) => ErrorBody {
                code: "io_error",
                message: self.to_string(),
            },
        }
    }
}

#[derive(Clone)]
struct AppState {
    fb: Arc<FactBase>,
    timeout: Duration,
}

fn json_response(status: StatusCode, body: String) -> Response {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .expect("static response parts are valid")
}

fn ok(body: String) -> Response {
    json_response(StatusCode::OK, body)
}

fn query_error(e: &QueryError) -> Response {
    let status = StatusCode::from_u16(e.http_status()).expect("documented status codes");
    json_response(status, ErrorBody::from(e).to_json())
}

/// Builds the API router over `fb`.
pub fn router(fb: Arc<FactBase>, config: &ServiceConfig) -> Result<Router, ServeError> {
    let state = AppState {
        fb,
        timeout: config.timeout,
    };
    let mut app = Router::new()
        .route("/api/health", get(health))
        .route("/api/sources", get(sources))
        .route("/api/sinks", get(sinks))
        .route("/api/apis", get(apis))
        .route("/api/find", get(find))
        .route("/api/query", post(query))
        .fallback(not_found)
        .with_state(state);
    if let Some(origin) = &config.allow_origin {
        let value =
            HeaderValue::from_str(origin).map_err(|_| ServeError::InvalidOrigin(origin.clone()))?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(value)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

async fn health(State(s): State<AppState>) -> Response {
    ok(catalog::health_json(&s.fb))
}

async fn sources(State(s): State<AppState>) -> Response {
    ok(catalog::sources_json(&s.fb))
}

async fn sinks(State(s): State<AppState>) -> Response {
    ok(catalog::sinks_json(&s.fb))
}

async fn apis(State(s): State<AppState>) -> Response {
    ok(catalog::apis_json(&s.fb))
}

#[derive(Deserialize)]
struct FindParams {
    label: Option<String>,
}

async fn find(State(s): State<AppState>, Query(p): Query<FindParams>) -> Response {
    match p.label {
        Some(label) => ok(catalog::find_json(&s.fb, &label)),
        None => query_error(&QueryError::BadRequest("missing parameter label".into())),
    }
}

async fn query(State(s): State<AppState>, body: String) -> Response {
    let req = match QueryRequest::from_json(&body) {
        Ok(r) => r,
        Err(e) => return query_error(&e),
    };
    let fb = Arc::clone(&s.fb);
    let work = tokio::task::spawn_blocking(move || render_json(&fb, &req));
    match tokio::time::timeout(s.timeout, work).await {
        Ok(Ok(Ok(doc))) => ok(doc),
        Ok(Ok(Err(e))) => query_error(&e),
        Ok(Err(join)) => json_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            error_json("internal", &join.to_string()),
        ),
        Err(_) => json_response(
            StatusCode::SERVICE_UNAVAILABLE,
            error_json(
                "timeout",
                &format!(
                    "query exceeded {} ms; lower limits.maxPaths or limits.maxDepth \
                     to get a truncated answer",
                    s.timeout.as_millis()
                ),
            ),
        ),
    }
}

async fn not_found() -> Response {
    json_response(
        StatusCode::NOT_FOUND,
        error_json("not_found", "no such endpoint"),
    )
}

/// Loads `facts` and serves the API until interrupted. Load failures are
/// returned before anything is bound.
pub async fn serve(facts: &Path, config: ServiceConfig) -> Result<(), ServeError> {
    let fb = Arc::new(load_facts(facts)?);
    serve_factbase(fb, config).await
}

pub async fn serve_factbase(fb: Arc<FactBase>, config: ServiceConfig) -> Result<(), ServeError> {
    let app = router(fb, &config)?;
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.bind,
            source,
        })?;
    eprintln!("tracelens: listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
