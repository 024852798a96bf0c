//! Side-by-side comparison of every engine operation and query template
//! against the reference semantics.

use std::collections::BTreeSet;

use rand::Rng;
use tracelens_core::queries;
use tracelens_core::{
    condense, coreachable_set, enumerate_paths, reachable_set, reaches, ApiId, EnumLimits,
    FactBase, NodeId, Overlay, PathSet, QueryError,
};

use crate::{Graph, Path};

fn paths_of(ps: &PathSet) -> Vec<Path> {
    ps.paths
        .iter()
        .map(|p| {
            (
                p.nodes.iter().map(|n| n.0).collect(),
                p.edges.iter().map(|e| e.0).collect(),
            )
        })
        .collect()
}

fn ids(v: &[NodeId]) -> Vec<u64> {
    v.iter().map(|n| n.0).collect()
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Compares all nine query templates against the oracle over every valid
/// endpoint combination. Returns the number of comparisons made.
pub fn check_queries(fb: &FactBase) -> Result<usize, String> {
    let g = Graph::from_factbase(fb);
    let lim = EnumLimits::unbounded();
    let mut n = 0;
    let sources: Vec<u64> = g.sources.iter().copied().collect();
    let sinks: Vec<u64> = g.sinks.iter().copied().collect();

    for &s in &sources {
        for &t in &sinks {
            let (src, snk) = (NodeId(s), NodeId(t));

            // whyflow
            match (queries::why_flow(fb, src, snk, lim), g.why_flow(s, t)) {
                (Ok(a), Some((paths, apis))) => {
                    ensure!(paths_of(&a.paths) == paths, "whyflow paths {s}->{t}");
                    ensure!(!a.paths.truncated, "whyflow truncated {s}->{t}");
                    let got: Vec<u64> = a.apis_on_paths.iter().map(|r| r.id.0).collect();
                    ensure!(got == apis, "whyflow apis {s}->{t}: {got:?} vs {apis:?}");
                }
                (Err(QueryError::NoFlow { .. }), None) => {}
                (got, want) => return Err(format!("whyflow {s}->{t}: {got:?} vs {want:?}")),
            }
            n += 1;

            // whynot
            match (queries::why_not_flow(fb, src, snk, lim), g.why_not(s, t)) {
                (Ok(a), Some((paths, apis))) => {
                    ensure!(
                        paths_of(&a.plausible_paths) == paths,
                        "whynot paths {s}->{t}"
                    );
                    let got: Vec<u64> = a.blocking_apis.iter().map(|r| r.id.0).collect();
                    ensure!(got == apis, "whynot apis {s}->{t}: {got:?} vs {apis:?}");
                }
                (Err(QueryError::FlowExists { .. }), None) => {}
                (got, want) => return Err(format!("whynot {s}->{t}: {got:?} vs {want:?}")),
            }
            n += 1;

            // global impact
            match (
                queries::global_impact(fb, src, snk, lim),
                g.global_impact(s, t),
            ) {
                (Ok(a), Some(want)) => {
                    let got: Vec<(u64, usize)> =
                        a.ranking.iter().map(|r| (r.api.0, r.score)).collect();
                    ensure!(got == want, "impact {s}->{t}: {got:?} vs {want:?}");
                }
                (Err(QueryError::NoFlow { .. }), None) => {}
                (got, want) => return Err(format!("impact {s}->{t}: {got:?} vs {want:?}")),
            }
            n += 1;

            let (count, truncated) =
                queries::count_paths(fb, src, snk, lim).map_err(|e| e.to_string())?;
            ensure!(!truncated, "count truncated");
            ensure!(count == g.count_paths(s, t), "count-paths {s}->{t}");
            n += 1;

            let edges: Vec<u64> = queries::passthrough_api_edges(fb, src, snk)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|e| e.0)
                .collect();
            ensure!(edges == g.passthrough_edges(s, t), "count-apis {s}->{t}");
            n += 1;
        }

        for api in g.apis.keys() {
            let a =
                queries::affected_sinks(fb, NodeId(s), ApiId(*api)).map_err(|e| e.to_string())?;
            let (killed, surviving) = g.affected_sinks(s, *api);
            ensure!(ids(&a.killed) == killed, "killed {s} api {api}");
            ensure!(ids(&a.surviving) == surviving, "surviving {s} api {api}");
            if a.api_unused {
                ensure!(a.killed.is_empty(), "unused api killed sinks");
            }
            n += 1;
        }

        for (i, &a) in sinks.iter().enumerate() {
            for &b in &sinks[i + 1..] {
                let got = queries::divergent_sinks(fb, NodeId(s), NodeId(a), NodeId(b));
                match (got, g.divergent_sinks(s, a, b)) {
                    (Ok(ans), Some(want)) => {
                        ensure!(ids(&ans.points) == want, "divergent sinks {s} {a} {b}")
                    }
                    (Err(QueryError::NotReachable { .. }), None) => {}
                    (got, want) => {
                        return Err(format!("divergent sinks {s} {a} {b}: {got:?} vs {want:?}"))
                    }
                }
                n += 1;
            }
        }
    }

    for (i, &a) in sources.iter().enumerate() {
        for &b in &sources[i + 1..] {
            for &t in &sinks {
                let got = queries::divergent_sources(fb, NodeId(a), NodeId(b), NodeId(t));
                match (got, g.divergent_sources(a, b, t)) {
                    (Ok(ans), Some(want)) => {
                        ensure!(ids(&ans.points) == want, "divergent sources {a} {b} {t}")
                    }
                    (Err(QueryError::NotReachable { .. }), None) => {}
                    (got, want) => {
                        return Err(format!(
                            "divergent sources {a} {b} {t}: {got:?} vs {want:?}"
                        ))
                    }
                }
                n += 1;
            }
        }
    }

    for overlay in sample_overlays(&g) {
        let (san, act) = overlay_sets(&overlay);
        let got = ids(&queries::branch_points(fb, &overlay).map_err(|e| e.to_string())?);
        ensure!(
            got == g.branch_points(&g.active(&san, &act)),
            "branch points"
        );
        n += 1;
    }
    Ok(n)
}

fn overlay_sets(o: &Overlay) -> (BTreeSet<u64>, BTreeSet<u64>) {
    (
        o.sanitized.iter().map(|a| a.0).collect(),
        o.activated.iter().map(|a| a.0).collect(),
    )
}

/// The empty overlay plus every single-API sanitize and activate overlay.
fn sample_overlays(g: &Graph) -> Vec<Overlay> {
    let mut v = vec![Overlay::empty()];
    for a in g.apis.keys() {
        v.push(Overlay::sanitizing([ApiId(*a)]));
        v.push(Overlay::activating([ApiId(*a)]));
    }
    v
}

/// Engine primitives (closures, paths, condensation) against the oracle
/// under sampled overlays, including path validity.
pub fn check_engine(fb: &FactBase) -> Result<usize, String> {
    let g = Graph::from_factbase(fb);
    let mut n = 0;
    for overlay in sample_overlays(&g) {
        let (san, act) = overlay_sets(&overlay);
        let active = g.active(&san, &act);
        let c = g.closure(&active);
        for &a in &g.nodes {
            let fwd: Vec<u64> = reachable_set(fb, &overlay, NodeId(a))
                .map_err(|e| e.to_string())?
                .iter()
                .map(|x| x.0)
                .collect();
            let want: Vec<u64> = g
                .nodes
                .iter()
                .copied()
                .filter(|b| c.reaches(a, *b))
                .collect();
            ensure!(fwd == want, "reachable_set {a}");
            let back: Vec<u64> = coreachable_set(fb, &overlay, NodeId(a))
                .map_err(|e| e.to_string())?
                .iter()
                .map(|x| x.0)
                .collect();
            let want: Vec<u64> = g
                .nodes
                .iter()
                .copied()
                .filter(|b| c.reaches(*b, a))
                .collect();
            ensure!(back == want, "coreachable_set {a}");
            for &b in &g.nodes {
                let r = reaches(fb, &overlay, NodeId(a), NodeId(b)).map_err(|e| e.to_string())?;
                ensure!(r == c.reaches(a, b), "reaches {a} {b}");
                let ps =
                    enumerate_paths(fb, &overlay, NodeId(a), NodeId(b), EnumLimits::unbounded())
                        .map_err(|e| e.to_string())?;
                ensure!(!ps.truncated, "unbounded enumeration truncated");
                let got = paths_of(&ps);
                ensure!(got == g.simple_paths(&active, a, b), "paths {a}->{b}");
                for (nodes, edges) in &got {
                    ensure!(nodes.len() == edges.len() + 1, "path shape");
                    let distinct: BTreeSet<_> = nodes.iter().collect();
                    ensure!(distinct.len() == nodes.len(), "path not simple");
                    for (i, e) in edges.iter().enumerate() {
                        let rec = active.iter().find(|x| x.id == *e);
                        ensure!(
                            matches!(rec, Some(x) if x.src == nodes[i] && x.dst == nodes[i + 1]),
                            "path edge {e} inactive or disconnected"
                        );
                    }
                }
                n += 3;
            }
        }
        // condensation equals the mutual-reachability partition
        let cond = condense(fb, &overlay).map_err(|e| e.to_string())?;
        for &a in &g.nodes {
            for &b in &g.nodes {
                let same = cond.component_of[&NodeId(a)] == cond.component_of[&NodeId(b)];
                ensure!(same == (c.reaches(a, b) && c.reaches(b, a)), "scc {a} {b}");
            }
        }
        let mut mins: Vec<u64> = cond.components.iter().map(|m| m[0].0).collect();
        let sorted = {
            let mut s = mins.clone();
            s.sort_unstable();
            s
        };
        ensure!(mins == sorted, "component numbering");
        mins.dedup();
        n += 1;
    }
    Ok(n)
}

/// Sanitizing never grows a reachable set; activating never shrinks one.
/// Checks `samples` random (overlay, extra api) pairs.
pub fn check_monotonicity<R: Rng>(
    fb: &FactBase,
    rng: &mut R,
    samples: usize,
) -> Result<usize, String> {
    let apis: Vec<ApiId> = fb.apis().map(|a| a.id).collect();
    let nodes: Vec<NodeId> = fb.nodes().map(|n| n.id).collect();
    let mut n = 0;
    for _ in 0..samples {
        let mut base = Overlay::empty();
        for a in &apis {
            match rng.gen_range(0..3) {
                0 => {
                    base.sanitized.insert(*a);
                }
                1 => {
                    base.activated.insert(*a);
                }
                _ => {}
            }
        }
        let free: Vec<ApiId> = apis
            .iter()
            .copied()
            .filter(|a| !base.sanitized.contains(a) && !base.activated.contains(a))
            .collect();
        if free.is_empty() {
            continue;
        }
        let extra = free[rng.gen_range(0..free.len())];
        let mut more_san = base.clone();
        more_san.sanitized.insert(extra);
        let mut more_act = base.clone();
        more_act.activated.insert(extra);
        for node in &nodes {
            let r0 = reachable_set(fb, &base, *node).map_err(|e| e.to_string())?;
            let rs = reachable_set(fb, &more_san, *node).map_err(|e| e.to_string())?;
            let ra = reachable_set(fb, &more_act, *node).map_err(|e| e.to_string())?;
            ensure!(rs.is_subset(&r0), "sanitizing {extra} grew reach of {node}");
            ensure!(
                r0.is_subset(&ra),
                "activating {extra} shrank reach of {node}"
            );
            n += 2;
        }
    }
    Ok(n)
}
