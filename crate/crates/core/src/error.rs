use thiserror::Error;

use crate::factbase::{ApiId, LoadError, NodeId};

/// Domain errors raised by the engine and the query templates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown node id {0}")]
    UnknownId(NodeId),
    #[error("unknown api id {0}")]
    UnknownApi(ApiId),
    #[error("node {0} is not a source")]
    NotASource(NodeId),
    #[error("node {0} is not a sink")]
    NotASink(NodeId),
    #[error("no taint flow from {from} to {to}; ask whynot instead")]
    NoFlow { from: NodeId, to: NodeId },
    #[error("a taint flow from {from} to {to} already exists; ask whyflow instead")]
    FlowExists { from: NodeId, to: NodeId },
    #[error("node {to} is not reachable from {from}")]
    NotReachable { from: NodeId, to: NodeId },
    #[error("apis {0:?} are both sanitized and activated")]
    OverlayConflict(Vec<ApiId>),
    #[error("both endpoints are node {0}; pick two distinct nodes")]
    SameEndpoints(NodeId),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl QueryError {
    /// Stable machine-readable code, shared by the CLI and the HTTP service.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::UnknownId(_) => "unknown_id",
            QueryError::UnknownApi(_) => "unknown_api",
            QueryError::NotASource(_) => "not_a_source",
            QueryError::NotASink(_) => "not_a_sink",
            QueryError::NoFlow { .. } => "no_flow",
            QueryError::FlowExists { .. } => "flow_exists",
            QueryError::NotReachable { .. } => "not_reachable",
            QueryError::OverlayConflict(_) => "overlay_conflict",
            QueryError::SameEndpoints(_) => "same_endpoints",
            QueryError::InvalidLimits(_) => "invalid_limits",
            QueryError::BadRequest(_) => "bad_request",
        }
    }

    /// Process exit code: 1 for failed preconditions on valid input, 2 for
    /// usage errors and unknown ids.
    pub fn exit_code(&self) -> i32 {
        match self {
            QueryError::NotASource(_)
            | QueryError::NotASink(_)
            | QueryError::NoFlow { .. }
            | QueryError::FlowExists { .. }
            | QueryError::NotReachable { .. } => 1,
            QueryError::UnknownId(_)
            | QueryError::UnknownApi(_)
            | QueryError::OverlayConflict(_)
            | QueryError::SameEndpoints(_)
            | QueryError::InvalidLimits(_)
            | QueryError::BadRequest(_) => 2,
        }
    }

    /// HTTP status: 400 usage, 404 unknown id, 409 failed precondition.
    pub fn http_status(&self) -> u16 {
        match self {
            QueryError::UnknownId(_) | QueryError::UnknownApi(_) => 404,
            QueryError::NotASource(_)
            | QueryError::NotASink(_)
            | QueryError::NoFlow { .. }
            | QueryError::FlowExists { .. }
            | QueryError::NotReachable { .. } => 409,
            QueryError::OverlayConflict(_)
            | QueryError::SameEndpoints(_)
            | QueryError::InvalidLimits(_)
            | QueryError::BadRequest(_) => 400,
        }
    }
}

/// Exit code for fact loading failures.
pub const LOAD_ERROR_EXIT: i32 = 2;

/// Machine-readable error body: `{"error":{"code":..,"message":..}}`.
pub fn error_json(code: &str, message: &str) -> String {
    let v = serde_json::json!({ "error": { "code": code, "message": message } });
    format!("{}\n", crate::exporter::canonical_json(&v))
}

impl From<&QueryError> for ErrorBody {
    fn from(e: &QueryError) -> Self {
        ErrorBody {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<&LoadError> for ErrorBody {
    fn from(e: &LoadError) -> Self {
        ErrorBody {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

/// Code and message pair rendered by [`ErrorBody::to_json`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl ErrorBody {
    pub fn to_json(&self) -> String {
        error_json(self.code, &self.message)
    }
}
