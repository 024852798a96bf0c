//! Plain-text rendering for `--format table`.

use std::fmt::Write;

use tracelens_core::queries::{ApiRef, QueryResult};
use tracelens_core::{FactBase, NodeId, NodeRecord, PathSet};

fn node_line(n: &NodeRecord) -> String {
    format!(
        "{:>6}  {}  ({}:{}:{})",
        n.id, n.label, n.file, n.line, n.column
    )
}

fn node(fb: &FactBase, id: NodeId) -> String {
    fb.node(id)
        .map(node_line)
        .unwrap_or_else(|| format!("{id:>6}"))
}

pub fn nodes<'a>(out: &mut String, list: impl IntoIterator<Item = &'a NodeRecord>) {
    let mut any = false;
    for n in list {
        any = true;
        let _ = writeln!(out, "{}", node_line(n));
    }
    if !any {
        out.push_str("(none)\n");
    }
}

pub fn apis<'a>(out: &mut String, list: impl IntoIterator<Item = (u64, &'a str)>) {
    let mut any = false;
    for (id, sig) in list {
        any = true;
        let _ = writeln!(out, "{id:>6}  {sig}");
    }
    if !any {
        out.push_str("(none)\n");
    }
}

fn paths(out: &mut String, fb: &FactBase, ps: &PathSet, title: &str) {
    let _ = writeln!(out, "{title}: {}", ps.paths.len());
    for (i, p) in ps.paths.iter().enumerate() {
        let _ = writeln!(out, "path {}:", i + 1);
        for (k, n) in p.nodes.iter().enumerate() {
            if k > 0 {
                let e = p.edges[k - 1];
                let rec = fb.edge(e).expect("path edges exist");
                let api = fb
                    .edge_api(e)
                    .and_then(|a| fb.api(a))
                    .map(|a| format!("  via {}", a.signature))
                    .unwrap_or_default();
                let _ = writeln!(out, "    -> edge {e} ({:?}){api}", rec.kind);
            }
            let _ = writeln!(out, "  {}", node(fb, *n));
        }
    }
}

fn api_refs(out: &mut String, title: &str, refs: &[ApiRef]) {
    let _ = writeln!(out, "{title}: {}", refs.len());
    for r in refs {
        let _ = writeln!(out, "{:>6}  {}", r.id, r.signature);
    }
}

fn node_list(out: &mut String, fb: &FactBase, title: &str, ids: &[NodeId]) {
    let _ = writeln!(out, "{title}: {}", ids.len());
    for id in ids {
        let _ = writeln!(out, "{}", node(fb, *id));
    }
}

pub fn result(fb: &FactBase, r: &QueryResult) -> String {
    let mut out = String::new();
    match r {
        QueryResult::WhyFlow { answer, .. } => {
            paths(&mut out, fb, &answer.paths, "flow paths");
            api_refs(&mut out, "apis on paths", &answer.apis_on_paths);
        }
        QueryResult::WhyNot { answer, .. } => {
            paths(&mut out, fb, &answer.plausible_paths, "plausible paths");
            api_refs(&mut out, "blocking apis", &answer.blocking_apis);
        }
        QueryResult::AffectedSinks { answer, .. } => {
            node_list(&mut out, fb, "killed sinks", &answer.killed);
            node_list(&mut out, fb, "surviving sinks", &answer.surviving);
            if answer.api_unused {
                out.push_str("warning: the api marks no edge reachable from the source\n");
            }
        }
        QueryResult::DivergentSinks { answer, .. }
        | QueryResult::DivergentSources { answer, .. } => {
            node_list(&mut out, fb, "divergence points", &answer.points);
        }
        QueryResult::GlobalImpact { answer, paths, .. } => {
            let _ = writeln!(out, "paths considered: {}", paths.paths.len());
            let _ = writeln!(out, "{:>6}  {:>6}  signature", "score", "api");
            for e in &answer.ranking {
                let _ = writeln!(out, "{:>6}  {:>6}  {}", e.score, e.api, e.signature);
            }
        }
        QueryResult::BranchPoints { points } => {
            node_list(&mut out, fb, "branch points", points);
        }
        QueryResult::CountPaths { count, .. } => {
            let _ = writeln!(out, "paths: {count}");
        }
        QueryResult::CountApis { edges, .. } => {
            let _ = writeln!(out, "pass-through api edges: {}", edges.len());
            for e in edges {
                let sig = fb
                    .edge_api(*e)
                    .and_then(|a| fb.api(a))
                    .map(|a| a.signature.as_str())
                    .unwrap_or("");
                let _ = writeln!(out, "{e:>6}  {sig}");
            }
        }
    }
    if r.truncated() {
        out.push_str("note: result truncated; raise --max-paths or --max-depth for more\n");
    }
    out
}
