//! Interrogative debugging over exported taint-analysis facts.
//!
//! A [`FactBase`] is loaded once from a fact directory. Queries then ask why
//! a flow exists, why it does not, and what would change if a third-party
//! API were modeled differently, all without re-running the upstream
//! analysis. Answers are rendered as role-annotated graphs by [`exporter`].

pub mod catalog;
pub mod engine;
pub mod error;
pub mod exporter;
pub mod factbase;
pub mod queries;
pub mod request;
pub mod synth;

#[cfg(test)]
pub(crate) mod fixtures;

pub use engine::{
    active_edges, condense, coreachable_set, enumerate_paths, reachable_set, reaches,
    ActiveEdgeSet, Condensation, EnumLimits, FlowPath, Overlay, PathSet,
};
pub use error::{ErrorBody, QueryError};
pub use exporter::{to_dot, to_graph_payload, to_json, GraphPayload, Role};
pub use factbase::{
    load_facts, ApiId, ApiRecord, EdgeId, EdgeKind, EdgeRecord, FactBase, FactBaseBuilder,
    FactCounts, LoadError, NodeId, NodeRecord,
};
pub use queries::QueryResult;
pub use request::{execute, render_dot, render_json, QueryKind, QueryParams, QueryRequest};
