//! Query requests shared by the CLI and the HTTP service.
//!
//! Both front ends build a [`QueryRequest`], run it through [`execute`] and
//! serialize with [`render_json`], so the same query yields the same bytes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{EnumLimits, Overlay};
use crate::error::QueryError;
use crate::exporter::{document_json, to_dot, to_graph_payload, GraphPayload};
use crate::factbase::{ApiId, FactBase, NodeId};
use crate::queries::{self, QueryResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryKind {
    #[serde(rename = "whyflow")]
    WhyFlow,
    #[serde(rename = "whynot")]
    WhyNot,
    #[serde(rename = "affected-sinks")]
    AffectedSinks,
    #[serde(rename = "divergent-sinks")]
    DivergentSinks,
    #[serde(rename = "divergent-sources")]
    DivergentSources,
    #[serde(rename = "global-impact")]
    GlobalImpact,
    #[serde(rename = "branch-points")]
    BranchPoints,
    #[serde(rename = "count-paths")]
    CountPaths,
    #[serde(rename = "count-apis")]
    CountApis,
}

impl QueryKind {
    pub const ALL: [QueryKind; 9] = [
        QueryKind::WhyFlow,
        QueryKind::WhyNot,
        QueryKind::AffectedSinks,
        QueryKind::DivergentSinks,
        QueryKind::DivergentSources,
        QueryKind::GlobalImpact,
        QueryKind::BranchPoints,
        QueryKind::CountPaths,
        QueryKind::CountApis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QueryKind::WhyFlow => "whyflow",
            QueryKind::WhyNot => "whynot",
            QueryKind::AffectedSinks => "affected-sinks",
            QueryKind::DivergentSinks => "divergent-sinks",
            QueryKind::DivergentSources => "divergent-sources",
            QueryKind::GlobalImpact => "global-impact",
            QueryKind::BranchPoints => "branch-points",
            QueryKind::CountPaths => "count-paths",
            QueryKind::CountApis => "count-apis",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryKind {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| QueryError::BadRequest(format!("unknown query type {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QueryParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink_a: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink_b: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_a: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_b: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api: Option<ApiId>,
    /// What-if overlay for branch-points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sanitize: Vec<ApiId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub activate: Vec<ApiId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LimitsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

impl LimitsSpec {
    pub fn resolve(&self) -> Result<EnumLimits, QueryError> {
        let d = EnumLimits::default();
        EnumLimits::new(
            self.max_paths.unwrap_or(d.max_paths),
            self.max_depth.unwrap_or(d.max_depth),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    #[serde(rename = "type")]
    pub kind: QueryKind,
    #[serde(default)]
    pub params: QueryParams,
    #[serde(default)]
    pub limits: LimitsSpec,
}

impl QueryRequest {
    pub fn new(kind: QueryKind, params: QueryParams) -> Self {
        Self {
            kind,
            params,
            limits: LimitsSpec::default(),
        }
    }

    /// Parses a request body. Malformed input is a `BadRequest`.
    pub fn from_json(body: &str) -> Result<Self, QueryError> {
        serde_json::from_str(body).map_err(|e| QueryError::BadRequest(e.to_string()))
    }

    /// The request as echoed in answers: the params given plus the
    /// effective limits.
    pub fn echo(&self) -> Value {
        let limits = self.limits.resolve().unwrap_or_default();
        serde_json::json!({
            "type": self.kind,
            "params": self.params,
            "limits": limits,
        })
    }
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T, QueryError> {
    v.ok_or_else(|| QueryError::BadRequest(format!("missing parameter {name}")))
}

/// Runs a request against `fb`.
pub fn execute(fb: &FactBase, req: &QueryRequest) -> Result<QueryResult, QueryError> {
    let p = &req.params;
    let limits = req.limits.resolve()?;
    Ok(match req.kind {
        QueryKind::WhyFlow => {
            let (source, sink) = (need(p.source, "source")?, need(p.sink, "sink")?);
            QueryResult::WhyFlow {
                source,
                sink,
                answer: queries::why_flow(fb, source, sink, limits)?,
            }
        }
        QueryKind::WhyNot => {
            let (source, sink) = (need(p.source, "source")?, need(p.sink, "sink")?);
            QueryResult::WhyNot {
                source,
                sink,
                answer: queries::why_not_flow(fb, source, sink, limits)?,
            }
        }
        QueryKind::AffectedSinks => {
            let (source, api) = (need(p.source, "source")?, need(p.api, "api")?);
            QueryResult::AffectedSinks {
                source,
                api,
                answer: queries::affected_sinks(fb, source, api)?,
            }
        }
        QueryKind::DivergentSinks => {
            let source = need(p.source, "source")?;
            let sink_a = need(p.sink_a, "sinkA")?;
            let sink_b = need(p.sink_b, "sinkB")?;
            QueryResult::DivergentSinks {
                source,
                sink_a,
                sink_b,
                answer: queries::divergent_sinks(fb, source, sink_a, sink_b)?,
            }
        }
        QueryKind::DivergentSources => {
            let source_a = need(p.source_a, "sourceA")?;
            let source_b = need(p.source_b, "sourceB")?;
            let sink = need(p.sink, "sink")?;
            QueryResult::DivergentSources {
                source_a,
                source_b,
                sink,
                answer: queries::divergent_sources(fb, source_a, source_b, sink)?,
            }
        }
        QueryKind::GlobalImpact => {
            let (source, sink) = (need(p.source, "source")?, need(p.sink, "sink")?);
            let (answer, paths) = queries::global_impact_with_paths(fb, source, sink, limits)?;
            QueryResult::GlobalImpact {
                source,
                sink,
                answer,
                paths,
            }
        }
        QueryKind::BranchPoints => {
            let overlay = Overlay {
                sanitized: p.sanitize.iter().copied().collect(),
                activated: p.activate.iter().copied().collect(),
            };
            QueryResult::BranchPoints {
                points: queries::branch_points(fb, &overlay)?,
            }
        }
        QueryKind::CountPaths => {
            let (source, sink) = (need(p.source, "source")?, need(p.sink, "sink")?);
            let (count, truncated) = queries::count_paths(fb, source, sink, limits)?;
            QueryResult::CountPaths {
                source,
                sink,
                count,
                truncated,
            }
        }
        QueryKind::CountApis => {
            let (source, sink) = (need(p.source, "source")?, need(p.sink, "sink")?);
            QueryResult::CountApis {
                source,
                sink,
                edges: queries::passthrough_api_edges(fb, source, sink)?,
            }
        }
    })
}

/// Executes `req` and returns the result with its rendered graph.
pub fn answer(
    fb: &FactBase,
    req: &QueryRequest,
) -> Result<(QueryResult, GraphPayload), QueryError> {
    let result = execute(fb, req)?;
    let payload = to_graph_payload(fb, &result);
    Ok((result, payload))
}

/// Canonical JSON document for `req`, newline-terminated.
pub fn render_json(fb: &FactBase, req: &QueryRequest) -> Result<String, QueryError> {
    let (result, payload) = answer(fb, req)?;
    Ok(document(req, &result, &payload))
}

/// The JSON document for an already executed request.
pub fn document(req: &QueryRequest, result: &QueryResult, payload: &GraphPayload) -> String {
    document_json(&req.echo(), result, payload)
}

pub fn render_dot(fb: &FactBase, req: &QueryRequest) -> Result<String, QueryError> {
    let (_, payload) = answer(fb, req)?;
    Ok(to_dot(&payload))
}
