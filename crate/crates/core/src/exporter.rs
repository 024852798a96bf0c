//! Render-ready graphs for query answers, plus DOT and canonical JSON
//! serializations.
//!
//! Node colors are carried as symbolic [`Role`]s; the front end owns the
//! palette. The DOT writer uses green, red, orange and blue for sources,
//! sinks, API nodes and other intermediate nodes, and dashes plausible edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::factbase::{EdgeId, EdgeKind, FactBase, NodeId};
use crate::queries::QueryResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Sink,
    Api,
    Intermediate,
}

impl Role {
    pub fn dot_color(self) -> &'static str {
        match self {
            Role::Source => "green",
            Role::Sink => "red",
            Role::Api => "orange",
            Role::Intermediate => "blue",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PayloadNode {
    pub id: NodeId,
    pub label: String,
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub role: Role,
    /// Set on nodes that are both source and sink; their role is `source`.
    pub dual_role: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PayloadEdge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api: Option<String>,
    pub on_answer_path: bool,
}

/// Nodes and edges sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphPayload {
    pub nodes: Vec<PayloadNode>,
    pub edges: Vec<PayloadEdge>,
}

/// Role of a node in any rendered graph. API nodes are the results of a
/// library call, i.e. targets of an edge carrying a library flow mark.
pub fn role_of(fb: &FactBase, id: NodeId) -> (Role, bool) {
    if fb.is_source(id) {
        return (Role::Source, fb.is_sink(id));
    }
    if fb.is_sink(id) {
        return (Role::Sink, false);
    }
    if fb.is_api_target(id) {
        (Role::Api, false)
    } else {
        (Role::Intermediate, false)
    }
}

pub fn to_graph_payload(fb: &FactBase, result: &QueryResult) -> GraphPayload {
    let mut nodes: BTreeSet<NodeId> = result.endpoints().into_iter().collect();
    let mut edges: BTreeSet<EdgeId> = BTreeSet::new();

    let paths = match result {
        QueryResult::WhyFlow { answer, .. } => Some(&answer.paths),
        QueryResult::WhyNot { answer, .. } => Some(&answer.plausible_paths),
        QueryResult::GlobalImpact { paths, .. } => Some(paths),
        _ => None,
    };
    if let Some(ps) = paths {
        for p in &ps.paths {
            nodes.extend(p.nodes.iter().copied());
            edges.extend(p.edges.iter().copied());
        }
    }
    match result {
        QueryResult::AffectedSinks { answer, .. } => {
            nodes.extend(answer.killed.iter().chain(&answer.surviving).copied());
        }
        QueryResult::DivergentSinks { answer, .. }
        | QueryResult::DivergentSources { answer, .. } => {
            nodes.extend(answer.points.iter().copied());
        }
        QueryResult::BranchPoints { points } => nodes.extend(points.iter().copied()),
        QueryResult::CountApis { edges: counted, .. } => {
            for e in counted {
                if let Some(r) = fb.edge(*e) {
                    nodes.insert(r.src);
                    nodes.insert(r.dst);
                }
                edges.insert(*e);
            }
        }
        _ => {}
    }

    // Impact score per API node: the best score among APIs whose marked
    // edges end at that node.
    let mut node_scores: BTreeMap<NodeId, usize> = BTreeMap::new();
    if let QueryResult::GlobalImpact { answer, .. } = result {
        let by_api: BTreeMap<_, _> = answer.ranking.iter().map(|r| (r.api, r.score)).collect();
        for (e, api) in fb.library_flows() {
            if let (Some(score), Some(rec)) = (by_api.get(api), fb.edge(*e)) {
                let slot = node_scores.entry(rec.dst).or_default();
                *slot = (*slot).max(*score);
            }
        }
    }

    let nodes = nodes
        .into_iter()
        .filter_map(|id| fb.node(id))
        .map(|rec| {
            let (role, dual_role) = role_of(fb, rec.id);
            let score = match role {
                Role::Api => node_scores.get(&rec.id).copied(),
                _ => None,
            };
            PayloadNode {
                id: rec.id,
                label: rec.label.clone(),
                file: rec.file.clone(),
                line: rec.line,
                column: rec.column,
                role,
                dual_role,
                score,
            }
        })
        .collect();
    let edges = edges
        .into_iter()
        .filter_map(|id| fb.edge(id))
        .map(|rec| PayloadEdge {
            id: rec.id,
            src: rec.src,
            dst: rec.dst,
            kind: rec.kind,
            api: fb
                .edge_api(rec.id)
                .and_then(|a| fb.api(a))
                .map(|a| a.signature.clone()),
            on_answer_path: true,
        })
        .collect();
    GraphPayload { nodes, edges }
}

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

pub fn to_dot(payload: &GraphPayload) -> String {
    let mut out = String::from(
        "digraph tracelens {\n  rankdir=LR;\n  node [shape=box, style=filled, fontcolor=white];\n",
    );
    for n in &payload.nodes {
        let _ = write!(
            out,
            "  n{} [label=\"{}\\n{}:{}:{}\", fillcolor={}",
            n.id,
            dot_escape(&n.label),
            dot_escape(&n.file),
            n.line,
            n.column,
            n.role.dot_color()
        );
        if n.dual_role {
            out.push_str(", peripheries=2");
        }
        if let Some(s) = n.score {
            let _ = write!(out, ", xlabel=\"{s}\"");
        }
        out.push_str("];\n");
    }
    for e in &payload.edges {
        let _ = write!(out, "  n{} -> n{} [label=\"", e.src, e.dst);
        match &e.api {
            Some(sig) => out.push_str(&dot_escape(sig)),
            None => {
                let _ = write!(out, "e{}", e.id);
            }
        }
        out.push('"');
        if e.kind == EdgeKind::Plausible {
            out.push_str(", style=dashed");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, &mut out);
    out
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k.as_str()], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn to_json(payload: &GraphPayload) -> String {
    canonical_json(&serde_json::to_value(payload).expect("payload serializes"))
}

/// The full wire document: query echo, truncation flag, typed answer and
/// graph. Ends with a newline.
pub fn document_json(query_echo: &Value, result: &QueryResult, payload: &GraphPayload) -> String {
    let doc = serde_json::json!({
        "query": query_echo,
        "truncated": result.truncated(),
        "answer": result.answer_json(),
        "graph": serde_json::to_value(payload).expect("payload serializes"),
    });
    let mut s = canonical_json(&doc);
    s.push('\n');
    s
}
