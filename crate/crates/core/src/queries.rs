//! The interrogative query templates.
//!
//! Each template validates its endpoints, runs the engine under the overlay
//! it needs, and returns a typed answer. [`QueryResult`] bundles an answer
//! with the endpoints and paths the exporter needs to draw it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::{
    active_edges_unchecked, closure_mask, enumerate_slots, require_node, scc_slots, Direction,
    EnumLimits, Overlay, PathSet,
};
use crate::error::QueryError;
use crate::factbase::{ApiId, EdgeId, EdgeKind, FactBase, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiRef {
    pub id: ApiId,
    pub signature: String,
}

impl ApiRef {
    fn new(fb: &FactBase, id: ApiId) -> Self {
        Self {
            id,
            signature: fb.api(id).map(|a| a.signature.clone()).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhyFlowAnswer {
    pub paths: PathSet,
    /// APIs marking an edge of a returned path, in order of first appearance.
    pub apis_on_paths: Vec<ApiRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhyNotAnswer {
    /// Paths that would exist if the plausible edges on them were activated.
    pub plausible_paths: PathSet,
    /// APIs of the plausible edges used, in order of first appearance.
    pub blocking_apis: Vec<ApiRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffectedSinksAnswer {
    pub killed: Vec<NodeId>,
    pub surviving: Vec<NodeId>,
    /// No active edge reachable from the source carries the API, so nothing
    /// can be killed.
    pub api_unused: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceMode {
    DivergentSinks,
    DivergentSources,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivergenceAnswer {
    pub points: Vec<NodeId>,
    pub mode: DivergenceMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImpactEntry {
    pub api: ApiId,
    pub signature: String,
    pub score: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactAnswer {
    /// Sorted by score descending, then signature ascending.
    pub ranking: Vec<ImpactEntry>,
    pub truncated: bool,
}

fn check_source(fb: &FactBase, id: NodeId) -> Result<(), QueryError> {
    require_node(fb, id)?;
    if !fb.is_source(id) {
        return Err(QueryError::NotASource(id));
    }
    Ok(())
}

fn check_sink(fb: &FactBase, id: NodeId) -> Result<(), QueryError> {
    require_node(fb, id)?;
    if !fb.is_sink(id) {
        return Err(QueryError::NotASink(id));
    }
    Ok(())
}

fn check_api(fb: &FactBase, id: ApiId) -> Result<(), QueryError> {
    fb.api(id).map(|_| ()).ok_or(QueryError::UnknownApi(id))
}

fn slot(fb: &FactBase, id: NodeId) -> usize {
    fb.slot(id).expect("endpoint checked")
}

fn baseline(fb: &FactBase) -> Vec<bool> {
    active_edges_unchecked(fb, &Overlay::empty())
        .mask()
        .to_vec()
}

fn reaches_mask(fb: &FactBase, active: &[bool], from: NodeId, to: NodeId) -> bool {
    closure_mask(fb, active, &[slot(fb, from)], Direction::Forward)[slot(fb, to)]
}

/// APIs marking `kind` edges of the given paths, deduplicated in order of
/// first appearance.
fn apis_in_order(fb: &FactBase, paths: &PathSet, kind: Option<EdgeKind>) -> Vec<ApiRef> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for p in &paths.paths {
        for e in &p.edges {
            if let Some(k) = kind {
                if fb.edge(*e).map(|r| r.kind) != Some(k) {
                    continue;
                }
            }
            if let Some(api) = fb.edge_api(*e) {
                if seen.insert(api) {
                    out.push(ApiRef::new(fb, api));
                }
            }
        }
    }
    out
}

/// Why is there a taint flow from `source` to `sink`?
pub fn why_flow(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
    limits: EnumLimits,
) -> Result<WhyFlowAnswer, QueryError> {
    check_source(fb, source)?;
    check_sink(fb, sink)?;
    limits.validate()?;
    let active = baseline(fb);
    if !reaches_mask(fb, &active, source, sink) {
        return Err(QueryError::NoFlow {
            from: source,
            to: sink,
        });
    }
    let paths = enumerate_slots(fb, &active, slot(fb, source), slot(fb, sink), limits);
    let apis_on_paths = apis_in_order(fb, &paths, None);
    Ok(WhyFlowAnswer {
        paths,
        apis_on_paths,
    })
}

/// Why is there no taint flow from `source` to `sink`? Finds the paths that
/// activating marked plausible edges would open.
pub fn why_not_flow(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
    limits: EnumLimits,
) -> Result<WhyNotAnswer, QueryError> {
    check_source(fb, source)?;
    check_sink(fb, sink)?;
    limits.validate()?;
    if reaches_mask(fb, &baseline(fb), source, sink) {
        return Err(QueryError::FlowExists {
            from: source,
            to: sink,
        });
    }
    // Every marked plausible edge switched on. Since the sink is unreachable
    // over actual edges alone, each path found uses at least one of them.
    let relaxed: Vec<bool> = (0..fb.edge_count())
        .map(|e| fb.index.edge_kind[e] == EdgeKind::Actual || fb.index.edge_api[e].is_some())
        .collect();
    let plausible_paths = enumerate_slots(fb, &relaxed, slot(fb, source), slot(fb, sink), limits);
    let blocking_apis = apis_in_order(fb, &plausible_paths, Some(EdgeKind::Plausible));
    Ok(WhyNotAnswer {
        plausible_paths,
        blocking_apis,
    })
}

/// Which sinks reachable from `source` would be lost if `api` were modeled
/// as a sanitizer?
pub fn affected_sinks(
    fb: &FactBase,
    source: NodeId,
    api: ApiId,
) -> Result<AffectedSinksAnswer, QueryError> {
    check_source(fb, source)?;
    check_api(fb, api)?;
    let s = slot(fb, source);
    let before_edges = baseline(fb);
    let after_edges = active_edges_unchecked(fb, &Overlay::sanitizing([api]));
    let before = closure_mask(fb, &before_edges, &[s], Direction::Forward);
    let after = closure_mask(fb, after_edges.mask(), &[s], Direction::Forward);

    let mut killed = Vec::new();
    let mut surviving = Vec::new();
    for &sink in fb.sinks() {
        let k = slot(fb, sink);
        if !before[k] {
            continue;
        }
        if after[k] {
            surviving.push(sink);
        } else {
            killed.push(sink);
        }
    }
    let api_unused = !(0..fb.edge_count()).any(|e| {
        before_edges[e] && fb.index.edge_api[e] == Some(api) && before[fb.index.edge_src[e]]
    });
    Ok(AffectedSinksAnswer {
        killed,
        surviving,
        api_unused,
    })
}

/// Nodes of `common` whose SCC has no active edge to (`maximal`) or from
/// (`!maximal`) another SCC inside `common`.
fn extremal_points(fb: &FactBase, active: &[bool], common: &[bool], maximal: bool) -> Vec<NodeId> {
    let comp = scc_slots(fb, active);
    let ncomp = comp.iter().map(|c| c + 1).max().unwrap_or(0);
    let mut dominated = vec![false; ncomp];
    for (e, on) in active.iter().enumerate() {
        let (a, b) = (fb.index.edge_src[e], fb.index.edge_dst[e]);
        if !on || !common[a] || !common[b] || comp[a] == comp[b] {
            continue;
        }
        if maximal {
            dominated[comp[a]] = true;
        } else {
            dominated[comp[b]] = true;
        }
    }
    (0..fb.node_count())
        .filter(|&n| common[n] && !dominated[comp[n]])
        .map(|n| fb.node_at(n))
        .collect()
}

/// Last common nodes where flows from `source` split toward `sink_a` and
/// `sink_b`.
pub fn divergent_sinks(
    fb: &FactBase,
    source: NodeId,
    sink_a: NodeId,
    sink_b: NodeId,
) -> Result<DivergenceAnswer, QueryError> {
    check_source(fb, source)?;
    check_sink(fb, sink_a)?;
    check_sink(fb, sink_b)?;
    if sink_a == sink_b {
        return Err(QueryError::SameEndpoints(sink_a));
    }
    let active = baseline(fb);
    let from = closure_mask(fb, &active, &[slot(fb, source)], Direction::Forward);
    for sink in [sink_a, sink_b] {
        if !from[slot(fb, sink)] {
            return Err(QueryError::NotReachable {
                from: source,
                to: sink,
            });
        }
    }
    let to_a = closure_mask(fb, &active, &[slot(fb, sink_a)], Direction::Backward);
    let to_b = closure_mask(fb, &active, &[slot(fb, sink_b)], Direction::Backward);
    let common: Vec<bool> = (0..fb.node_count())
        .map(|n| from[n] && to_a[n] && to_b[n])
        .collect();
    Ok(DivergenceAnswer {
        points: extremal_points(fb, &active, &common, true),
        mode: DivergenceMode::DivergentSinks,
    })
}

/// First common nodes where flows from `source_a` and `source_b` merge on
/// their way to `sink`.
pub fn divergent_sources(
    fb: &FactBase,
    source_a: NodeId,
    source_b: NodeId,
    sink: NodeId,
) -> Result<DivergenceAnswer, QueryError> {
    check_source(fb, source_a)?;
    check_source(fb, source_b)?;
    check_sink(fb, sink)?;
    if source_a == source_b {
        return Err(QueryError::SameEndpoints(source_a));
    }
    let active = baseline(fb);
    let to = closure_mask(fb, &active, &[slot(fb, sink)], Direction::Backward);
    for source in [source_a, source_b] {
        if !to[slot(fb, source)] {
            return Err(QueryError::NotReachable {
                from: source,
                to: sink,
            });
        }
    }
    let from_a = closure_mask(fb, &active, &[slot(fb, source_a)], Direction::Forward);
    let from_b = closure_mask(fb, &active, &[slot(fb, source_b)], Direction::Forward);
    let common: Vec<bool> = (0..fb.node_count())
        .map(|n| to[n] && from_a[n] && from_b[n])
        .collect();
    Ok(DivergenceAnswer {
        points: extremal_points(fb, &active, &common, false),
        mode: DivergenceMode::DivergentSources,
    })
}

/// Ranks APIs by how many source-to-sink paths contain them, and returns
/// the paths that were scored.
pub fn global_impact_with_paths(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
    limits: EnumLimits,
) -> Result<(ImpactAnswer, PathSet), QueryError> {
    check_source(fb, source)?;
    check_sink(fb, sink)?;
    limits.validate()?;
    let active = baseline(fb);
    if !reaches_mask(fb, &active, source, sink) {
        return Err(QueryError::NoFlow {
            from: source,
            to: sink,
        });
    }
    let paths = enumerate_slots(fb, &active, slot(fb, source), slot(fb, sink), limits);
    let mut scores: BTreeMap<ApiId, usize> = BTreeMap::new();
    for p in &paths.paths {
        let on_path: BTreeSet<ApiId> = p.edges.iter().filter_map(|e| fb.edge_api(*e)).collect();
        for api in on_path {
            *scores.entry(api).or_default() += 1;
        }
    }
    let mut ranking: Vec<ImpactEntry> = scores
        .into_iter()
        .map(|(api, score)| ImpactEntry {
            api,
            signature: ApiRef::new(fb, api).signature,
            score,
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.signature.cmp(&b.signature))
    });
    let answer = ImpactAnswer {
        ranking,
        truncated: paths.truncated,
    };
    Ok((answer, paths))
}

pub fn global_impact(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
    limits: EnumLimits,
) -> Result<ImpactAnswer, QueryError> {
    global_impact_with_paths(fb, source, sink, limits).map(|(a, _)| a)
}

/// Nodes with more than one active outgoing edge. Parallel edges count
/// separately.
pub fn branch_points(fb: &FactBase, overlay: &Overlay) -> Result<Vec<NodeId>, QueryError> {
    overlay.validate(fb)?;
    let active = active_edges_unchecked(fb, overlay);
    let mut out_degree = vec![0usize; fb.node_count()];
    for e in 0..fb.edge_count() {
        if active.mask()[e] {
            out_degree[fb.index.edge_src[e]] += 1;
        }
    }
    Ok(out_degree
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 1)
        .map(|(n, _)| fb.node_at(n))
        .collect())
}

/// Number of simple source-to-sink paths, with the truncation flag.
pub fn count_paths(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
    limits: EnumLimits,
) -> Result<(usize, bool), QueryError> {
    check_source(fb, source)?;
    check_sink(fb, sink)?;
    limits.validate()?;
    let ps = enumerate_slots(fb, &baseline(fb), slot(fb, source), slot(fb, sink), limits);
    Ok((ps.paths.len(), ps.truncated))
}

/// Marked active edges lying between `source` and `sink`, ascending.
/// Computed from closures, so exact on cyclic graphs.
pub fn passthrough_api_edges(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
) -> Result<Vec<EdgeId>, QueryError> {
    check_source(fb, source)?;
    check_sink(fb, sink)?;
    let active = baseline(fb);
    let from = closure_mask(fb, &active, &[slot(fb, source)], Direction::Forward);
    let to = closure_mask(fb, &active, &[slot(fb, sink)], Direction::Backward);
    Ok((0..fb.edge_count())
        .filter(|&e| {
            active[e]
                && fb.index.edge_api[e].is_some()
                && from[fb.index.edge_src[e]]
                && to[fb.index.edge_dst[e]]
        })
        .map(|e| fb.edge_at(e))
        .collect())
}

pub fn count_passthrough_apis(
    fb: &FactBase,
    source: NodeId,
    sink: NodeId,
) -> Result<usize, QueryError> {
    passthrough_api_edges(fb, source, sink).map(|v| v.len())
}

/// A typed answer together with what is needed to render it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    WhyFlow {
        source: NodeId,
        sink: NodeId,
        answer: WhyFlowAnswer,
    },
    WhyNot {
        source: NodeId,
        sink: NodeId,
        answer: WhyNotAnswer,
    },
    AffectedSinks {
        source: NodeId,
        api: ApiId,
        answer: AffectedSinksAnswer,
    },
    DivergentSinks {
        source: NodeId,
        sink_a: NodeId,
        sink_b: NodeId,
        answer: DivergenceAnswer,
    },
    DivergentSources {
        source_a: NodeId,
        source_b: NodeId,
        sink: NodeId,
        answer: DivergenceAnswer,
    },
    GlobalImpact {
        source: NodeId,
        sink: NodeId,
        answer: ImpactAnswer,
        paths: PathSet,
    },
    BranchPoints {
        points: Vec<NodeId>,
    },
    CountPaths {
        source: NodeId,
        sink: NodeId,
        count: usize,
        truncated: bool,
    },
    CountApis {
        source: NodeId,
        sink: NodeId,
        edges: Vec<EdgeId>,
    },
}

fn paths_json(ps: &PathSet) -> Value {
    json!(ps.paths)
}

impl QueryResult {
    pub fn truncated(&self) -> bool {
        match self {
            QueryResult::WhyFlow { answer, .. } => answer.paths.truncated,
            QueryResult::WhyNot { answer, .. } => answer.plausible_paths.truncated,
            QueryResult::GlobalImpact { answer, .. } => answer.truncated,
            QueryResult::CountPaths { truncated, .. } => *truncated,
            _ => false,
        }
    }

    /// Query endpoints, always shown in the rendered graph.
    pub fn endpoints(&self) -> Vec<NodeId> {
        match self {
            QueryResult::WhyFlow { source, sink, .. }
            | QueryResult::WhyNot { source, sink, .. }
            | QueryResult::GlobalImpact { source, sink, .. }
            | QueryResult::CountPaths { source, sink, .. }
            | QueryResult::CountApis { source, sink, .. } => vec![*source, *sink],
            QueryResult::AffectedSinks { source, .. } => vec![*source],
            QueryResult::DivergentSinks {
                source,
                sink_a,
                sink_b,
                ..
            } => vec![*source, *sink_a, *sink_b],
            QueryResult::DivergentSources {
                source_a,
                source_b,
                sink,
                ..
            } => vec![*source_a, *source_b, *sink],
            QueryResult::BranchPoints { .. } => Vec::new(),
        }
    }

    /// The per-type answer fields of the wire schema.
    pub fn answer_json(&self) -> Value {
        match self {
            QueryResult::WhyFlow { answer, .. } => json!({
                "paths": paths_json(&answer.paths),
                "apisOnPaths": answer.apis_on_paths,
            }),
            QueryResult::WhyNot { answer, .. } => json!({
                "plausiblePaths": paths_json(&answer.plausible_paths),
                "blockingApis": answer.blocking_apis,
            }),
            QueryResult::AffectedSinks { answer, .. } => json!({
                "killed": answer.killed,
                "surviving": answer.surviving,
                "apiUnused": answer.api_unused,
            }),
            QueryResult::DivergentSinks { answer, .. }
            | QueryResult::DivergentSources { answer, .. } => json!({
                "points": answer.points,
                "mode": answer.mode,
            }),
            QueryResult::GlobalImpact { answer, paths, .. } => json!({
                "ranking": answer.ranking,
                "pathCount": paths.paths.len(),
            }),
            QueryResult::BranchPoints { points } => json!({ "points": points }),
            QueryResult::CountPaths { count, .. } => json!({ "count": count }),
            QueryResult::CountApis { edges, .. } => json!({
                "count": edges.len(),
                "edges": edges,
            }),
        }
    }
}
