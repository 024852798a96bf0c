//! Reference semantics for testing: naive boolean-matrix closures and
//! exhaustive simple-path enumeration, written straight from the definitions
//! and sharing no code with the engine. Only practical on small graphs.

use std::collections::{BTreeMap, BTreeSet};

pub mod check;

use rand::seq::SliceRandom;
use rand::Rng;
use tracelens_core::{EdgeKind, FactBase, FactBaseBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub id: u64,
    pub src: u64,
    pub dst: u64,
    pub plausible: bool,
    pub api: Option<u64>,
}

/// A path as (nodes, edges).
pub type Path = (Vec<u64>, Vec<u64>);

#[derive(Debug, Clone)]
pub struct Graph {
    pub nodes: Vec<u64>,
    pub edges: Vec<Edge>,
    pub sources: BTreeSet<u64>,
    pub sinks: BTreeSet<u64>,
    pub apis: BTreeMap<u64, String>,
}

/// Reachability matrix indexed by position in `Graph::nodes`.
pub struct Closure {
    pos: BTreeMap<u64, usize>,
    r: Vec<Vec<bool>>,
}

impl Closure {
    pub fn reaches(&self, a: u64, b: u64) -> bool {
        self.r[self.pos[&a]][self.pos[&b]]
    }
}

impl Graph {
    pub fn from_factbase(fb: &FactBase) -> Self {
        Self {
            nodes: fb.nodes().map(|n| n.id.0).collect(),
            edges: fb
                .edges()
                .map(|e| Edge {
                    id: e.id.0,
                    src: e.src.0,
                    dst: e.dst.0,
                    plausible: e.kind == EdgeKind::Plausible,
                    api: fb.edge_api(e.id).map(|a| a.0),
                })
                .collect(),
            sources: fb.sources().iter().map(|n| n.0).collect(),
            sinks: fb.sinks().iter().map(|n| n.0).collect(),
            apis: fb.apis().map(|a| (a.id.0, a.signature.clone())).collect(),
        }
    }

    /// Edges present under the hypothesis `sanitized` / `activated`.
    pub fn active(&self, sanitized: &BTreeSet<u64>, activated: &BTreeSet<u64>) -> Vec<Edge> {
        self.edges
            .iter()
            .filter(|e| {
                if e.plausible {
                    matches!(e.api, Some(a) if activated.contains(&a))
                } else {
                    !matches!(e.api, Some(a) if sanitized.contains(&a))
                }
            })
            .copied()
            .collect()
    }

    pub fn baseline(&self) -> Vec<Edge> {
        self.active(&BTreeSet::new(), &BTreeSet::new())
    }

    /// Actual edges plus every marked plausible edge.
    pub fn relaxed(&self) -> Vec<Edge> {
        self.edges
            .iter()
            .filter(|e| !e.plausible || e.api.is_some())
            .copied()
            .collect()
    }

    /// Warshall's algorithm over a reflexive adjacency matrix.
    #[allow(clippy::needless_range_loop)]
    pub fn closure(&self, edges: &[Edge]) -> Closure {
        let pos: BTreeMap<u64, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, i))
            .collect();
        let n = self.nodes.len();
        let mut r = vec![vec![false; n]; n];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = true;
        }
        for e in edges {
            r[pos[&e.src]][pos[&e.dst]] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if !r[i][k] {
                    continue;
                }
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        Closure { pos, r }
    }

    pub fn reachable(&self, edges: &[Edge], from: u64) -> BTreeSet<u64> {
        let c = self.closure(edges);
        self.nodes
            .iter()
            .copied()
            .filter(|n| c.reaches(from, *n))
            .collect()
    }

    /// Every simple path from `s` to `t`, ordered lexicographically by the
    /// sequence of (next node, edge id) steps.
    pub fn simple_paths(&self, edges: &[Edge], s: u64, t: u64) -> Vec<Path> {
        fn walk(
            edges: &[Edge],
            at: u64,
            t: u64,
            nodes: &mut Vec<u64>,
            used: &mut Vec<u64>,
            out: &mut Vec<Path>,
        ) {
            if at == t {
                out.push((nodes.clone(), used.clone()));
                return;
            }
            for e in edges.iter().filter(|e| e.src == at) {
                if nodes.contains(&e.dst) {
                    continue;
                }
                nodes.push(e.dst);
                used.push(e.id);
                walk(edges, e.dst, t, nodes, used, out);
                nodes.pop();
                used.pop();
            }
        }
        let mut out = Vec::new();
        walk(edges, s, t, &mut vec![s], &mut Vec::new(), &mut out);
        out.sort_by_key(|(n, e)| {
            n[1..]
                .iter()
                .zip(e.iter())
                .map(|(a, b)| (*a, *b))
                .collect::<Vec<_>>()
        });
        out
    }

    fn api_of(&self, edge: u64) -> Option<u64> {
        self.edges.iter().find(|e| e.id == edge).and_then(|e| e.api)
    }

    fn is_plausible(&self, edge: u64) -> bool {
        self.edges.iter().any(|e| e.id == edge && e.plausible)
    }

    fn first_appearance(&self, paths: &[Path], plausible_only: bool) -> Vec<u64> {
        let mut out = Vec::new();
        for (_, es) in paths {
            for e in es {
                if plausible_only && !self.is_plausible(*e) {
                    continue;
                }
                if let Some(a) = self.api_of(*e) {
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
            }
        }
        out
    }

    /// (paths, APIs on them) or None when there is no flow.
    pub fn why_flow(&self, s: u64, t: u64) -> Option<(Vec<Path>, Vec<u64>)> {
        let base = self.baseline();
        if !self.closure(&base).reaches(s, t) {
            return None;
        }
        let paths = self.simple_paths(&base, s, t);
        let apis = self.first_appearance(&paths, false);
        Some((paths, apis))
    }

    /// (plausible paths, blocking APIs) or None when the flow exists.
    pub fn why_not(&self, s: u64, t: u64) -> Option<(Vec<Path>, Vec<u64>)> {
        if self.closure(&self.baseline()).reaches(s, t) {
            return None;
        }
        let paths = self.simple_paths(&self.relaxed(), s, t);
        let apis = self.first_appearance(&paths, true);
        Some((paths, apis))
    }

    /// (killed, surviving) sinks.
    pub fn affected_sinks(&self, s: u64, api: u64) -> (Vec<u64>, Vec<u64>) {
        let before = self.closure(&self.baseline());
        let after = self.closure(&self.active(&[api].into(), &BTreeSet::new()));
        let reached: Vec<u64> = self
            .sinks
            .iter()
            .copied()
            .filter(|k| before.reaches(s, *k))
            .collect();
        reached.into_iter().partition(|k| !after.reaches(s, *k))
    }

    fn extremal(&self, common: &[u64], c: &Closure, last: bool) -> Vec<u64> {
        common
            .iter()
            .copied()
            .filter(|m| {
                !common.iter().any(|o| {
                    let strictly = |a: u64, b: u64| c.reaches(a, b) && !c.reaches(b, a);
                    if last {
                        strictly(*m, *o)
                    } else {
                        strictly(*o, *m)
                    }
                })
            })
            .collect()
    }

    /// Last common nodes, or None if a sink is unreachable.
    pub fn divergent_sinks(&self, s: u64, a: u64, b: u64) -> Option<Vec<u64>> {
        let c = self.closure(&self.baseline());
        if !c.reaches(s, a) || !c.reaches(s, b) {
            return None;
        }
        let common: Vec<u64> = self
            .nodes
            .iter()
            .copied()
            .filter(|m| c.reaches(s, *m) && c.reaches(*m, a) && c.reaches(*m, b))
            .collect();
        Some(self.extremal(&common, &c, true))
    }

    /// First common nodes, or None if a source cannot reach the sink.
    pub fn divergent_sources(&self, a: u64, b: u64, t: u64) -> Option<Vec<u64>> {
        let c = self.closure(&self.baseline());
        if !c.reaches(a, t) || !c.reaches(b, t) {
            return None;
        }
        let common: Vec<u64> = self
            .nodes
            .iter()
            .copied()
            .filter(|m| c.reaches(a, *m) && c.reaches(b, *m) && c.reaches(*m, t))
            .collect();
        Some(self.extremal(&common, &c, false))
    }

    /// (api, score) sorted by score desc then signature, or None on no flow.
    pub fn global_impact(&self, s: u64, t: u64) -> Option<Vec<(u64, usize)>> {
        let (paths, _) = self.why_flow(s, t)?;
        let mut score: BTreeMap<u64, usize> = BTreeMap::new();
        for (_, es) in &paths {
            let apis: BTreeSet<u64> = es.iter().filter_map(|e| self.api_of(*e)).collect();
            for a in apis {
                *score.entry(a).or_default() += 1;
            }
        }
        let mut v: Vec<(u64, usize)> = score.into_iter().collect();
        v.sort_by(|x, y| {
            y.1.cmp(&x.1)
                .then_with(|| self.apis[&x.0].cmp(&self.apis[&y.0]))
        });
        Some(v)
    }

    pub fn branch_points(&self, edges: &[Edge]) -> Vec<u64> {
        self.nodes
            .iter()
            .copied()
            .filter(|n| edges.iter().filter(|e| e.src == *n).count() > 1)
            .collect()
    }

    pub fn count_paths(&self, s: u64, t: u64) -> usize {
        self.simple_paths(&self.baseline(), s, t).len()
    }

    pub fn passthrough_edges(&self, s: u64, t: u64) -> Vec<u64> {
        let base = self.baseline();
        let c = self.closure(&base);
        let mut v: Vec<u64> = base
            .iter()
            .filter(|e| e.api.is_some() && c.reaches(s, e.src) && c.reaches(e.dst, t))
            .map(|e| e.id)
            .collect();
        v.sort_unstable();
        v
    }
}

/// Random fact base with at most `max_nodes` nodes and `max_edges` edges.
/// Ids are sparse and shuffled; roughly half the graphs are DAGs.
pub fn random_factbase<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> FactBase {
    let n = rng.gen_range(2..=max_nodes);
    let mut ids: Vec<u64> = (1..=(3 * max_nodes as u64)).collect();
    ids.shuffle(rng);
    ids.truncate(n);
    ids.sort_unstable();
    let dag = rng.gen_bool(0.5);

    let mut b = FactBaseBuilder::new();
    for (i, id) in ids.iter().enumerate() {
        b.node(*id, format!("n{id}"), "Gen.java", i as u32 + 1, 1);
    }
    let napis = rng.gen_range(1..=4u64);
    for a in 1..=napis {
        b.api(a, format!("lib.Api{}#call{}()", (napis - a) % 3, a));
    }

    let m = rng.gen_range(0..=max_edges);
    let mut eids: Vec<u64> = (1..=(2 * max_edges as u64 + 2)).collect();
    eids.shuffle(rng);
    for &eid in eids.iter().take(m) {
        let mut s = rng.gen_range(0..n);
        let mut d = rng.gen_range(0..n);
        if dag {
            if s == d {
                d = (d + 1) % n;
            }
            if s > d {
                std::mem::swap(&mut s, &mut d);
            }
        }
        if rng.gen_bool(0.2) {
            b.plausible_edge(eid, ids[s], ids[d]);
        } else {
            b.edge(eid, ids[s], ids[d]);
        }
        if rng.gen_bool(0.45) {
            b.library_flow(eid, rng.gen_range(1..=napis));
        }
    }
    for id in &ids {
        if rng.gen_bool(0.3) {
            b.source(*id);
        }
        if rng.gen_bool(0.35) {
            b.sink(*id);
        }
    }
    b.source(ids[0]);
    b.sink(ids[n - 1]);
    b.build().expect("generated facts are well-formed")
}
