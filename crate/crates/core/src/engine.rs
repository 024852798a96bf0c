//! Reachability, simple-path enumeration and SCC condensation over the edges
//! that are active under a what-if [`Overlay`].
//!
//! An edge is active when it is an actual edge not marked with a sanitized
//! API, or a plausible edge marked with an activated API. Plausible edges
//! without a mark are never active. The overlay lives only for one call; the
//! [`FactBase`] is never touched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::QueryError;
use crate::factbase::{ApiId, EdgeId, EdgeKind, FactBase, NodeId};

/// A what-if hypothesis: APIs modeled as sanitizers and APIs modeled as
/// pass-throughs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlay {
    #[serde(default)]
    pub sanitized: BTreeSet<ApiId>,
    #[serde(default)]
    pub activated: BTreeSet<ApiId>,
}

impl Overlay {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn sanitizing(apis: impl IntoIterator<Item = ApiId>) -> Self {
        Self {
            sanitized: apis.into_iter().collect(),
            activated: BTreeSet::new(),
        }
    }

    pub fn activating(apis: impl IntoIterator<Item = ApiId>) -> Self {
        Self {
            sanitized: BTreeSet::new(),
            activated: apis.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sanitized.is_empty() && self.activated.is_empty()
    }

    pub fn validate(&self, fb: &FactBase) -> Result<(), QueryError> {
        let both: Vec<ApiId> = self
            .sanitized
            .intersection(&self.activated)
            .copied()
            .collect();
        if !both.is_empty() {
            return Err(QueryError::OverlayConflict(both));
        }
        for api in self.sanitized.iter().chain(&self.activated) {
            if fb.api(*api).is_none() {
                return Err(QueryError::UnknownApi(*api));
            }
        }
        Ok(())
    }
}

/// The edges active under one overlay, as a mask over edge slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveEdgeSet {
    mask: Vec<bool>,
    ids: Vec<EdgeId>,
}

impl ActiveEdgeSet {
    /// Active edge ids, ascending.
    pub fn ids(&self) -> &[EdgeId] {
        &self.ids
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub(crate) fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Computes the active edge set. Fails on an invalid overlay.
pub fn active_edges(fb: &FactBase, overlay: &Overlay) -> Result<ActiveEdgeSet, QueryError> {
    overlay.validate(fb)?;
    Ok(active_edges_unchecked(fb, overlay))
}

pub(crate) fn active_edges_unchecked(fb: &FactBase, overlay: &Overlay) -> ActiveEdgeSet {
    let idx = &fb.index;
    let mask: Vec<bool> = (0..fb.edge_count())
        .map(|e| match (idx.edge_kind[e], idx.edge_api[e]) {
            (EdgeKind::Actual, Some(api)) => !overlay.sanitized.contains(&api),
            (EdgeKind::Actual, None) => true,
            (EdgeKind::Plausible, Some(api)) => overlay.activated.contains(&api),
            (EdgeKind::Plausible, None) => false,
        })
        .collect();
    let ids = mask
        .iter()
        .enumerate()
        .filter(|(_, on)| **on)
        .map(|(e, _)| fb.edge_at(e))
        .collect();
    ActiveEdgeSet { mask, ids }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Backward,
}

/// Closure over active edges from the given seed slots, as a slot mask.
pub(crate) fn closure_mask(
    fb: &FactBase,
    active: &[bool],
    seeds: &[usize],
    dir: Direction,
) -> Vec<bool> {
    let adj = match dir {
        Direction::Forward => &fb.index.fwd_all,
        Direction::Backward => &fb.index.rev_all,
    };
    let mut seen = vec![false; fb.node_count()];
    let mut stack = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(n) = stack.pop() {
        for a in &adj[n] {
            if active[a.edge] && !seen[a.peer] {
                seen[a.peer] = true;
                stack.push(a.peer);
            }
        }
    }
    seen
}

pub(crate) fn mask_to_set(fb: &FactBase, mask: &[bool]) -> BTreeSet<NodeId> {
    mask.iter()
        .enumerate()
        .filter(|(_, on)| **on)
        .map(|(i, _)| fb.node_at(i))
        .collect()
}

pub(crate) fn require_node(fb: &FactBase, id: NodeId) -> Result<usize, QueryError> {
    fb.slot(id).ok_or(QueryError::UnknownId(id))
}

/// True iff `to` is reachable from `from` over active edges. Every node
/// reaches itself.
pub fn reaches(
    fb: &FactBase,
    overlay: &Overlay,
    from: NodeId,
    to: NodeId,
) -> Result<bool, QueryError> {
    let a = require_node(fb, from)?;
    let b = require_node(fb, to)?;
    let active = active_edges(fb, overlay)?;
    Ok(closure_mask(fb, active.mask(), &[a], Direction::Forward)[b])
}

/// Forward closure from `from`, including `from`.
pub fn reachable_set(
    fb: &FactBase,
    overlay: &Overlay,
    from: NodeId,
) -> Result<BTreeSet<NodeId>, QueryError> {
    let s = require_node(fb, from)?;
    let active = active_edges(fb, overlay)?;
    Ok(mask_to_set(
        fb,
        &closure_mask(fb, active.mask(), &[s], Direction::Forward),
    ))
}

/// Backward closure to `to`, including `to`.
pub fn coreachable_set(
    fb: &FactBase,
    overlay: &Overlay,
    to: NodeId,
) -> Result<BTreeSet<NodeId>, QueryError> {
    let s = require_node(fb, to)?;
    let active = active_edges(fb, overlay)?;
    Ok(mask_to_set(
        fb,
        &closure_mask(fb, active.mask(), &[s], Direction::Backward),
    ))
}

/// Caps on simple-path enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnumLimits {
    pub max_paths: usize,
    /// Maximum number of edges in one path.
    pub max_depth: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        Self {
            max_paths: 1024,
            max_depth: 256,
        }
    }
}

impl EnumLimits {
    pub fn new(max_paths: usize, max_depth: usize) -> Result<Self, QueryError> {
        let l = Self {
            max_paths,
            max_depth,
        };
        l.validate()?;
        Ok(l)
    }

    /// Limits large enough that graphs in tests never hit them.
    pub fn unbounded() -> Self {
        Self {
            max_paths: usize::MAX,
            max_depth: usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.max_paths == 0 || self.max_depth == 0 {
            return Err(QueryError::InvalidLimits(
                "maxPaths and maxDepth must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A node-simple path. `edges[i]` connects `nodes[i]` to `nodes[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowPath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl FlowPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<FlowPath>,
    /// Set when `max_paths` or `max_depth` cut the search short.
    pub truncated: bool,
}

/// Enumerates simple paths from `src` to `dst` over active edges.
///
/// Depth-first, successors in ascending (node id, edge id) order, paths in
/// discovery order. `src == dst` yields the single zero-length path.
pub fn enumerate_paths(
    fb: &FactBase,
    overlay: &Overlay,
    src: NodeId,
    dst: NodeId,
    limits: EnumLimits,
) -> Result<PathSet, QueryError> {
    let s = require_node(fb, src)?;
    let d = require_node(fb, dst)?;
    limits.validate()?;
    let active = active_edges(fb, overlay)?;
    Ok(enumerate_slots(fb, active.mask(), s, d, limits))
}

pub(crate) fn enumerate_slots(
    fb: &FactBase,
    active: &[bool],
    src: usize,
    dst: usize,
    limits: EnumLimits,
) -> PathSet {
    let mut out = PathSet::default();
    if src == dst {
        out.paths.push(FlowPath {
            nodes: vec![fb.node_at(src)],
            edges: Vec::new(),
        });
        return out;
    }
    // Nodes that cannot reach dst are never worth entering.
    let useful = closure_mask(fb, active, &[dst], Direction::Backward);
    if !useful[src] {
        return out;
    }

    let adj = &fb.index.fwd_all;
    let mut on_path = vec![false; fb.node_count()];
    // (node slot, next adjacency position)
    let mut frames: Vec<(usize, usize)> = vec![(src, 0)];
    let mut edges: Vec<usize> = Vec::new();
    on_path[src] = true;

    'search: while let Some(&(node, start)) = frames.last() {
        let depth = edges.len();
        let mut pos = start;
        let mut descend = None;
        while pos < adj[node].len() {
            let a = adj[node][pos];
            pos += 1;
            if !active[a.edge] || !useful[a.peer] || on_path[a.peer] {
                continue;
            }
            if a.peer == dst {
                if out.paths.len() == limits.max_paths {
                    out.truncated = true;
                    break 'search;
                }
                let mut path_edges = edges.clone();
                path_edges.push(a.edge);
                out.paths.push(to_path(fb, &frames, &path_edges, dst));
                continue;
            }
            // Entering peer only pays off if one more edge still fits.
            if depth + 2 > limits.max_depth {
                out.truncated = true;
                continue;
            }
            descend = Some(a);
            break;
        }
        if let Some(top) = frames.last_mut() {
            top.1 = pos;
        }
        if let Some(a) = descend {
            on_path[a.peer] = true;
            edges.push(a.edge);
            frames.push((a.peer, 0));
            continue;
        }
        frames.pop();
        on_path[node] = false;
        edges.pop();
    }
    out
}

fn to_path(fb: &FactBase, frames: &[(usize, usize)], edges: &[usize], dst: usize) -> FlowPath {
    let mut nodes: Vec<NodeId> = frames.iter().map(|(n, _)| fb.node_at(*n)).collect();
    nodes.push(fb.node_at(dst));
    FlowPath {
        nodes,
        edges: edges.iter().map(|e| fb.edge_at(*e)).collect(),
    }
}

/// SCC condensation of the active-edge graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condensation {
    /// Members of each component, ascending. Components are numbered by
    /// their smallest member.
    pub components: Vec<Vec<NodeId>>,
    pub component_of: BTreeMap<NodeId, usize>,
    /// Edges between distinct components.
    pub dag: BTreeSet<(usize, usize)>,
}

pub fn condense(fb: &FactBase, overlay: &Overlay) -> Result<Condensation, QueryError> {
    let active = active_edges(fb, overlay)?;
    let comp = scc_slots(fb, active.mask());
    let ncomp = comp.iter().map(|c| c + 1).max().unwrap_or(0);
    let mut components = vec![Vec::new(); ncomp];
    let mut component_of = BTreeMap::new();
    for (slot, &c) in comp.iter().enumerate() {
        components[c].push(fb.node_at(slot));
        component_of.insert(fb.node_at(slot), c);
    }
    let mut dag = BTreeSet::new();
    for e in 0..fb.edge_count() {
        if !active.mask()[e] {
            continue;
        }
        let (a, b) = (comp[fb.index.edge_src[e]], comp[fb.index.edge_dst[e]]);
        if a != b {
            dag.insert((a, b));
        }
    }
    Ok(Condensation {
        components,
        component_of,
        dag,
    })
}

/// Tarjan's algorithm, iterative. Returns a component number per slot,
/// numbered in order of each component's smallest slot.
pub(crate) fn scc_slots(fb: &FactBase, active: &[bool]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = fb.node_count();
    let adj = &fb.index.fwd_all;
    let mut order = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw = vec![UNSEEN; n];
    let mut counter = 0;
    let mut ncomp = 0;

    for root in 0..n {
        if order[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        order[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < adj[v].len() {
                let a = adj[v][*next];
                *next += 1;
                if !active[a.edge] {
                    continue;
                }
                let w = a.peer;
                if order[w] == UNSEEN {
                    order[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(order[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == order[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    raw[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }

    // Renumber by smallest member slot.
    let mut remap = vec![UNSEEN; ncomp];
    let mut next = 0;
    for &c in &raw {
        if remap[c] == UNSEEN {
            remap[c] = next;
            next += 1;
        }
    }
    raw.iter().map(|c| remap[*c]).collect()
}
