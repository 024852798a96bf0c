//! Loading, validation and indexing of exported dataflow facts.
//!
//! A fact directory holds seven tab-separated files, one fact per line and
//! no header row:
//!
//! | file                   | columns                          |
//! |------------------------|----------------------------------|
//! | `node.facts`           | id, label, file, line, column    |
//! | `edge.facts`           | id, src, dst                     |
//! | `plausible_edge.facts` | id, src, dst                     |
//! | `source.facts`         | nodeid                           |
//! | `sink.facts`           | nodeid                           |
//! | `library_flow.facts`   | edgeid, fact_id                  |
//! | `library_model.facts`  | fact_id, signature               |
//!
//! Actual and plausible edges share one id namespace. A [`FactBase`] is
//! immutable once built; every other module only reads from it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NODE_FILE: &str = "node.facts";
pub const EDGE_FILE: &str = "edge.facts";
pub const PLAUSIBLE_EDGE_FILE: &str = "plausible_edge.facts";
pub const SOURCE_FILE: &str = "source.facts";
pub const SINK_FILE: &str = "sink.facts";
pub const LIBRARY_FLOW_FILE: &str = "library_flow.facts";
pub const LIBRARY_MODEL_FILE: &str = "library_model.facts";

/// All fact files, in load order.
pub const FACT_FILES: [&str; 7] = [
    NODE_FILE,
    EDGE_FILE,
    PLAUSIBLE_EDGE_FILE,
    SOURCE_FILE,
    SINK_FILE,
    LIBRARY_FLOW_FILE,
    LIBRARY_MODEL_FILE,
];

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl From<u64> for $name {
            fn from(v: u64) -> Self {
                Self(v)
            }
        }
    };
}

id_newtype!(
    /// Identifier of a dataflow node.
    NodeId
);
id_newtype!(
    /// Identifier of an actual or plausible edge.
    EdgeId
);
id_newtype!(
    /// Identifier of a third-party API in the library model catalog.
    ApiId
);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub label: String,
    pub file: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Actual,
    Plausible,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Actual => "actual",
            EdgeKind::Plausible => "plausible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRecord {
    pub id: ApiId,
    pub signature: String,
}

/// Errors raised while loading or building a [`FactBase`].
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("missing fact file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("failed to read {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    ParseError {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("duplicate {kind} {id}")]
    DuplicateId { kind: &'static str, id: String },
}

impl LoadError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::MissingFile(_) => "missing_file",
            LoadError::Io { .. } => "io_error",
            LoadError::ParseError { .. } => "parse_error",
            LoadError::DanglingReference(_) => "dangling_reference",
            LoadError::DuplicateId { .. } => "duplicate_id",
        }
    }
}

/// One adjacency entry. `peer` is the dense index of the opposite endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Adj {
    pub peer: usize,
    pub edge: usize,
}

/// Dense indexes used by the engine. Node and edge slots follow ascending id
/// order, so sorting by slot is sorting by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Index {
    pub node_ids: Vec<NodeId>,
    pub node_slot: BTreeMap<NodeId, usize>,
    pub edge_ids: Vec<EdgeId>,
    pub edge_slot: BTreeMap<EdgeId, usize>,
    pub edge_src: Vec<usize>,
    pub edge_dst: Vec<usize>,
    pub edge_kind: Vec<EdgeKind>,
    pub edge_api: Vec<Option<ApiId>>,
    /// Per node slot: is it the target of an edge carrying a library flow?
    pub api_target: Vec<bool>,
    /// Forward adjacency split by edge kind, each list sorted by
    /// (dst id, edge id). Reverse lists are sorted by (src id, edge id).
    pub fwd_actual: Vec<Vec<Adj>>,
    pub fwd_plausible: Vec<Vec<Adj>>,
    pub fwd_all: Vec<Vec<Adj>>,
    pub rev_actual: Vec<Vec<Adj>>,
    pub rev_plausible: Vec<Vec<Adj>>,
    pub rev_all: Vec<Vec<Adj>>,
}

/// The loaded universe of one analysis run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactBase {
    nodes: BTreeMap<NodeId, NodeRecord>,
    edges: BTreeMap<EdgeId, EdgeRecord>,
    sources: BTreeSet<NodeId>,
    sinks: BTreeSet<NodeId>,
    lib_flows: BTreeMap<EdgeId, ApiId>,
    apis: BTreeMap<ApiId, ApiRecord>,
    pub(crate) index: Index,
}

/// Fact counts, in the shape reported by the service health endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FactCounts {
    pub nodes: usize,
    pub edges: usize,
    pub plausible_edges: usize,
    pub sources: usize,
    pub sinks: usize,
    pub apis: usize,
    pub library_flows: usize,
}

/// Loads the fact files in `dir`. Nothing is returned unless every file
/// parses and every reference resolves.
pub fn load_facts(dir: impl AsRef<Path>) -> Result<FactBase, LoadError> {
    let dir = dir.as_ref();
    let mut texts = Vec::with_capacity(FACT_FILES.len());
    for name in FACT_FILES {
        let path = dir.join(name);
        match fs::read_to_string(&path) {
            Ok(t) => texts.push(t),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(LoadError::MissingFile(path))
            }
            Err(source) => return Err(LoadError::Io { path, source }),
        }
    }

    let mut b = FactBaseBuilder::new();
    for row in rows(NODE_FILE, &texts[0], 5)? {
        let (line, f) = row;
        let id = NodeId(parse_u64(NODE_FILE, line, f[0], "node id")?);
        let ln = parse_u32(NODE_FILE, line, f[3], "line")?;
        let col = parse_u32(NODE_FILE, line, f[4], "column")?;
        b.push_node(NODE_FILE, line, id, f[1], f[2], ln, col)?;
    }
    for (file, text, kind) in [
        (EDGE_FILE, &texts[1], EdgeKind::Actual),
        (PLAUSIBLE_EDGE_FILE, &texts[2], EdgeKind::Plausible),
    ] {
        for (line, f) in rows(file, text, 3)? {
            let id = EdgeId(parse_u64(file, line, f[0], "edge id")?);
            let src = NodeId(parse_u64(file, line, f[1], "source node id")?);
            let dst = NodeId(parse_u64(file, line, f[2], "target node id")?);
            b.edges.push(EdgeRecord { id, src, dst, kind });
        }
    }
    for (line, f) in rows(SOURCE_FILE, &texts[3], 1)? {
        b.sources
            .push(NodeId(parse_u64(SOURCE_FILE, line, f[0], "node id")?));
    }
    for (line, f) in rows(SINK_FILE, &texts[4], 1)? {
        b.sinks
            .push(NodeId(parse_u64(SINK_FILE, line, f[0], "node id")?));
    }
    for (line, f) in rows(LIBRARY_FLOW_FILE, &texts[5], 2)? {
        let edge = EdgeId(parse_u64(LIBRARY_FLOW_FILE, line, f[0], "edge id")?);
        let api = ApiId(parse_u64(LIBRARY_FLOW_FILE, line, f[1], "fact id")?);
        b.lib_flows.push((edge, api));
    }
    for (line, f) in rows(LIBRARY_MODEL_FILE, &texts[6], 2)? {
        let id = ApiId(parse_u64(LIBRARY_MODEL_FILE, line, f[0], "fact id")?);
        if f[1].is_empty() {
            return Err(parse_err(LIBRARY_MODEL_FILE, line, "empty signature"));
        }
        b.apis.push(ApiRecord {
            id,
            signature: f[1].to_string(),
        });
    }
    b.build()
}

type Row<'a> = (usize, Vec<&'a str>);

fn rows<'a>(file: &str, text: &'a str, arity: usize) -> Result<Vec<Row<'a>>, LoadError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != arity {
            return Err(parse_err(
                file,
                i + 1,
                &format!(
                    "expected {arity} tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn parse_err(file: &str, line: usize, reason: &str) -> LoadError {
    LoadError::ParseError {
        file: file.to_string(),
        line,
        reason: reason.to_string(),
    }
}

fn parse_u64(file: &str, line: usize, field: &str, what: &str) -> Result<u64, LoadError> {
    field
        .parse()
        .map_err(|_| parse_err(file, line, &format!("invalid {what} {field:?}")))
}

fn parse_u32(file: &str, line: usize, field: &str, what: &str) -> Result<u32, LoadError> {
    field
        .parse()
        .map_err(|_| parse_err(file, line, &format!("invalid {what} {field:?}")))
}

/// Incremental construction of a [`FactBase`], validated in one shot by
/// [`FactBaseBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct FactBaseBuilder {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    sources: Vec<NodeId>,
    sinks: Vec<NodeId>,
    lib_flows: Vec<(EdgeId, ApiId)>,
    apis: Vec<ApiRecord>,
}

impl FactBaseBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(
        &mut self,
        id: u64,
        label: impl Into<String>,
        file: impl Into<String>,
        line: u32,
        column: u32,
    ) -> &mut Self {
        self.nodes.push(NodeRecord {
            id: NodeId(id),
            label: label.into(),
            file: file.into(),
            line,
            column,
        });
        self
    }

    pub fn edge(&mut self, id: u64, src: u64, dst: u64) -> &mut Self {
        self.edges.push(EdgeRecord {
            id: EdgeId(id),
            src: NodeId(src),
            dst: NodeId(dst),
            kind: EdgeKind::Actual,
        });
        self
    }

    pub fn plausible_edge(&mut self, id: u64, src: u64, dst: u64) -> &mut Self {
        self.edges.push(EdgeRecord {
            id: EdgeId(id),
            src: NodeId(src),
            dst: NodeId(dst),
            kind: EdgeKind::Plausible,
        });
        self
    }

    pub fn source(&mut self, id: u64) -> &mut Self {
        self.sources.push(NodeId(id));
        self
    }

    pub fn sink(&mut self, id: u64) -> &mut Self {
        self.sinks.push(NodeId(id));
        self
    }

    pub fn api(&mut self, id: u64, signature: impl Into<String>) -> &mut Self {
        self.apis.push(ApiRecord {
            id: ApiId(id),
            signature: signature.into(),
        });
        self
    }

    pub fn library_flow(&mut self, edge: u64, api: u64) -> &mut Self {
        self.lib_flows.push((EdgeId(edge), ApiId(api)));
        self
    }

    #[allow(clippy::too_many_arguments)]
    fn push_node(
        &mut self,
        file: &str,
        line: usize,
        id: NodeId,
        label: &str,
        path: &str,
        ln: u32,
        col: u32,
    ) -> Result<(), LoadError> {
        if label.is_empty() {
            return Err(parse_err(file, line, "empty label"));
        }
        if ln == 0 || col == 0 {
            return Err(parse_err(file, line, "line and column are 1-based"));
        }
        self.node(id.0, label, path, ln, col);
        Ok(())
    }

    pub fn build(&self) -> Result<FactBase, LoadError> {
        let mut nodes = BTreeMap::new();
        for n in &self.nodes {
            if n.label.is_empty() {
                return Err(LoadError::ParseError {
                    file: NODE_FILE.into(),
                    line: 0,
                    reason: format!("node {} has an empty label", n.id),
                });
            }
            if n.line == 0 || n.column == 0 {
                return Err(LoadError::ParseError {
                    file: NODE_FILE.into(),
                    line: 0,
                    reason: format!("node {} has a zero line or column", n.id),
                });
            }
            if nodes.insert(n.id, n.clone()).is_some() {
                return Err(LoadError::DuplicateId {
                    kind: "node",
                    id: n.id.to_string(),
                });
            }
        }

        let mut edges = BTreeMap::new();
        for e in &self.edges {
            for end in [e.src, e.dst] {
                if !nodes.contains_key(&end) {
                    return Err(LoadError::DanglingReference(format!(
                        "{} edge {} references unknown node {}",
                        e.kind, e.id, end
                    )));
                }
            }
            if edges.insert(e.id, *e).is_some() {
                return Err(LoadError::DuplicateId {
                    kind: "edge",
                    id: e.id.to_string(),
                });
            }
        }

        for (what, list) in [("source", &self.sources), ("sink", &self.sinks)] {
            for n in list.iter() {
                if !nodes.contains_key(n) {
                    return Err(LoadError::DanglingReference(format!(
                        "{what} mark references unknown node {n}"
                    )));
                }
            }
        }
        let sources: BTreeSet<NodeId> = self.sources.iter().copied().collect();
        let sinks: BTreeSet<NodeId> = self.sinks.iter().copied().collect();

        let mut apis = BTreeMap::new();
        let mut signatures = BTreeSet::new();
        for a in &self.apis {
            if !signatures.insert(a.signature.as_str()) {
                return Err(LoadError::DuplicateId {
                    kind: "api signature",
                    id: a.signature.clone(),
                });
            }
            if apis.insert(a.id, a.clone()).is_some() {
                return Err(LoadError::DuplicateId {
                    kind: "api",
                    id: a.id.to_string(),
                });
            }
        }

        let mut lib_flows = BTreeMap::new();
        for &(edge, api) in &self.lib_flows {
            if !edges.contains_key(&edge) {
                return Err(LoadError::DanglingReference(format!(
                    "library flow references unknown edge {edge}"
                )));
            }
            if !apis.contains_key(&api) {
                return Err(LoadError::DanglingReference(format!(
                    "library flow on edge {edge} references unknown api {api}"
                )));
            }
            if lib_flows.insert(edge, api).is_some() {
                return Err(LoadError::DuplicateId {
                    kind: "library flow edge",
                    id: edge.to_string(),
                });
            }
        }

        let index = Index::build(&nodes, &edges, &lib_flows);
        Ok(FactBase {
            nodes,
            edges,
            sources,
            sinks,
            lib_flows,
            apis,
            index,
        })
    }
}

impl Index {
    fn build(
        nodes: &BTreeMap<NodeId, NodeRecord>,
        edges: &BTreeMap<EdgeId, EdgeRecord>,
        lib_flows: &BTreeMap<EdgeId, ApiId>,
    ) -> Self {
        let node_ids: Vec<NodeId> = nodes.keys().copied().collect();
        let node_slot: BTreeMap<NodeId, usize> =
            node_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let edge_ids: Vec<EdgeId> = edges.keys().copied().collect();
        let edge_slot: BTreeMap<EdgeId, usize> =
            edge_ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let n = node_ids.len();
        let mut idx = Index {
            api_target: vec![false; n],
            fwd_actual: vec![Vec::new(); n],
            fwd_plausible: vec![Vec::new(); n],
            fwd_all: vec![Vec::new(); n],
            rev_actual: vec![Vec::new(); n],
            rev_plausible: vec![Vec::new(); n],
            rev_all: vec![Vec::new(); n],
            ..Default::default()
        };
        for (slot, e) in edges.values().enumerate() {
            let s = node_slot[&e.src];
            let d = node_slot[&e.dst];
            idx.edge_src.push(s);
            idx.edge_dst.push(d);
            idx.edge_kind.push(e.kind);
            idx.edge_api.push(lib_flows.get(&e.id).copied());
            if lib_flows.contains_key(&e.id) {
                idx.api_target[d] = true;
            }
            let fwd = Adj {
                peer: d,
                edge: slot,
            };
            let rev = Adj {
                peer: s,
                edge: slot,
            };
            idx.fwd_all[s].push(fwd);
            idx.rev_all[d].push(rev);
            match e.kind {
                EdgeKind::Actual => {
                    idx.fwd_actual[s].push(fwd);
                    idx.rev_actual[d].push(rev);
                }
                EdgeKind::Plausible => {
                    idx.fwd_plausible[s].push(fwd);
                    idx.rev_plausible[d].push(rev);
                }
            }
        }
        for lists in [
            &mut idx.fwd_actual,
            &mut idx.fwd_plausible,
            &mut idx.fwd_all,
            &mut idx.rev_actual,
            &mut idx.rev_plausible,
            &mut idx.rev_all,
        ] {
            for l in lists.iter_mut() {
                l.sort_by_key(|a| (a.peer, a.edge));
            }
        }
        idx.node_ids = node_ids;
        idx.node_slot = node_slot;
        idx.edge_ids = edge_ids;
        idx.edge_slot = edge_slot;
        idx
    }
}

impl FactBase {
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    /// Actual and plausible edges in ascending id order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &EdgeRecord> {
        self.edges.values()
    }

    pub fn sources(&self) -> &BTreeSet<NodeId> {
        &self.sources
    }

    pub fn sinks(&self) -> &BTreeSet<NodeId> {
        &self.sinks
    }

    pub fn library_flows(&self) -> &BTreeMap<EdgeId, ApiId> {
        &self.lib_flows
    }

    pub fn apis(&self) -> impl ExactSizeIterator<Item = &ApiRecord> {
        self.apis.values()
    }

    pub fn is_source(&self, id: NodeId) -> bool {
        self.sources.contains(&id)
    }

    pub fn is_sink(&self, id: NodeId) -> bool {
        self.sinks.contains(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&EdgeRecord> {
        self.edges.get(&id)
    }

    pub fn api(&self, id: ApiId) -> Option<&ApiRecord> {
        self.apis.get(&id)
    }

    /// The API whose library flow marks `edge`, if any.
    pub fn edge_api(&self, edge: EdgeId) -> Option<ApiId> {
        self.lib_flows.get(&edge).copied()
    }

    /// Whether `node` receives the result of a library call, i.e. is the
    /// target of an edge carrying a library flow mark.
    pub fn is_api_target(&self, node: NodeId) -> bool {
        self.slot(node).is_some_and(|s| self.index.api_target[s])
    }

    pub fn list_sources(&self) -> Vec<(NodeId, &NodeRecord)> {
        self.sources
            .iter()
            .map(|id| (*id, &self.nodes[id]))
            .collect()
    }

    pub fn list_sinks(&self) -> Vec<(NodeId, &NodeRecord)> {
        self.sinks.iter().map(|id| (*id, &self.nodes[id])).collect()
    }

    pub fn list_apis(&self) -> Vec<(ApiId, &str)> {
        self.apis
            .values()
            .map(|a| (a.id, a.signature.as_str()))
            .collect()
    }

    /// Nodes whose label contains `needle`, ascending by id.
    pub fn find_by_label(&self, needle: &str) -> Vec<&NodeRecord> {
        self.nodes
            .values()
            .filter(|n| n.label.contains(needle))
            .collect()
    }

    pub fn counts(&self) -> FactCounts {
        let plausible = self
            .edges
            .values()
            .filter(|e| e.kind == EdgeKind::Plausible)
            .count();
        FactCounts {
            nodes: self.nodes.len(),
            edges: self.edges.len() - plausible,
            plausible_edges: plausible,
            sources: self.sources.len(),
            sinks: self.sinks.len(),
            apis: self.apis.len(),
            library_flows: self.lib_flows.len(),
        }
    }

    /// Writes the fact files into `dir`, creating it if needed. Loading the
    /// result yields a structurally equal `FactBase`.
    pub fn write_facts(&self, dir: impl AsRef<Path>) -> io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut node = String::new();
        for n in self.nodes.values() {
            node.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                n.id, n.label, n.file, n.line, n.column
            ));
        }
        let mut edge = String::new();
        let mut plausible = String::new();
        for e in self.edges.values() {
            let out = match e.kind {
                EdgeKind::Actual => &mut edge,
                EdgeKind::Plausible => &mut plausible,
            };
            out.push_str(&format!("{}\t{}\t{}\n", e.id, e.src, e.dst));
        }
        let ids =
            |set: &BTreeSet<NodeId>| -> String { set.iter().map(|n| format!("{n}\n")).collect() };
        let flows: String = self
            .lib_flows
            .iter()
            .map(|(e, a)| format!("{e}\t{a}\n"))
            .collect();
        let model: String = self
            .apis
            .values()
            .map(|a| format!("{}\t{}\n", a.id, a.signature))
            .collect();

        fs::write(dir.join(NODE_FILE), node)?;
        fs::write(dir.join(EDGE_FILE), edge)?;
        fs::write(dir.join(PLAUSIBLE_EDGE_FILE), plausible)?;
        fs::write(dir.join(SOURCE_FILE), ids(&self.sources))?;
        fs::write(dir.join(SINK_FILE), ids(&self.sinks))?;
        fs::write(dir.join(LIBRARY_FLOW_FILE), flows)?;
        fs::write(dir.join(LIBRARY_MODEL_FILE), model)?;
        Ok(())
    }

    pub(crate) fn slot(&self, id: NodeId) -> Option<usize> {
        self.index.node_slot.get(&id).copied()
    }

    pub(crate) fn node_at(&self, slot: usize) -> NodeId {
        self.index.node_ids[slot]
    }

    pub(crate) fn edge_at(&self, slot: usize) -> EdgeId {
        self.index.edge_ids[slot]
    }

    pub(crate) fn node_count(&self) -> usize {
        self.index.node_ids.len()
    }

    pub(crate) fn edge_count(&self) -> usize {
        self.index.edge_ids.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn three_node_dir() -> tempfile::TempDir {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        write(
            d,
            NODE_FILE,
            "1\tuser.getSSN()\tsrc/A.java\t10\t5\n2\tssn\tsrc/A.java\t11\t9\n3\tlog(ssn)\tsrc/B.java\t3\t1\n",
        );
        write(d, EDGE_FILE, "10\t1\t2\n11\t2\t3\n");
        write(d, PLAUSIBLE_EDGE_FILE, "");
        write(d, SOURCE_FILE, "1\n");
        write(d, SINK_FILE, "3\n");
        write(d, LIBRARY_FLOW_FILE, "11\t7\n");
        write(
            d,
            LIBRARY_MODEL_FILE,
            "7\tcom.acme.Crypto#encrypt(String)\n",
        );
        tmp
    }

    #[test]
    fn loads_hand_built_directory() {
        let tmp = three_node_dir();
        let fb = load_facts(tmp.path()).unwrap();
        assert_eq!(fb.nodes().len(), 3);
        assert_eq!(fb.counts().edges, 2);
        assert_eq!(fb.counts().plausible_edges, 0);
        assert_eq!(fb.edge_api(EdgeId(11)), Some(ApiId(7)));
    }

    #[test]
    fn empty_directory_is_missing_file() {
        let tmp = tempfile::tempdir().unwrap();
        match load_facts(tmp.path()) {
            Err(LoadError::MissingFile(p)) => assert!(p.ends_with(NODE_FILE)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_single_file_is_named() {
        let tmp = three_node_dir();
        fs::remove_file(tmp.path().join(SINK_FILE)).unwrap();
        match load_facts(tmp.path()) {
            Err(LoadError::MissingFile(p)) => assert!(p.ends_with(SINK_FILE)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edge_to_unknown_node_is_dangling() {
        let tmp = three_node_dir();
        write(tmp.path(), EDGE_FILE, "10\t1\t2\n7\t1\t99\n");
        let err = load_facts(tmp.path()).unwrap_err();
        assert!(matches!(err, LoadError::DanglingReference(ref m) if m.contains("edge 7")));
        assert_eq!(err.code(), "dangling_reference");
    }

    #[test]
    fn mark_to_unknown_api_is_dangling() {
        let tmp = three_node_dir();
        write(tmp.path(), LIBRARY_FLOW_FILE, "11\t8\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::DanglingReference(_))
        ));
        write(tmp.path(), LIBRARY_FLOW_FILE, "12\t7\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::DanglingReference(_))
        ));
    }

    #[test]
    fn shared_edge_namespace() {
        let tmp = three_node_dir();
        write(tmp.path(), PLAUSIBLE_EDGE_FILE, "10\t2\t1\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::DuplicateId { kind: "edge", .. })
        ));
    }

    #[test]
    fn duplicates_rejected() {
        let tmp = three_node_dir();
        write(tmp.path(), LIBRARY_MODEL_FILE, "7\ta.B#c()\n7\ta.B#d()\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::DuplicateId { kind: "api", .. })
        ));

        let tmp = three_node_dir();
        write(tmp.path(), LIBRARY_FLOW_FILE, "11\t7\n11\t7\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::DuplicateId { .. })
        ));

        let tmp = three_node_dir();
        write(tmp.path(), NODE_FILE, "1\ta\tf\t1\t1\n1\tb\tf\t1\t1\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::DuplicateId { kind: "node", .. })
        ));
    }

    #[test]
    fn parse_errors_carry_location() {
        let tmp = three_node_dir();
        write(tmp.path(), EDGE_FILE, "10\t1\t2\n11\t2\n");
        match load_facts(tmp.path()) {
            Err(LoadError::ParseError { file, line, .. }) => {
                assert_eq!(file, EDGE_FILE);
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        write(tmp.path(), EDGE_FILE, "10\t1\t2\n");
        write(
            tmp.path(),
            NODE_FILE,
            "1\tx\tf\t0\t1\n2\ty\tf\t1\t1\n3\tz\tf\t1\t1\n",
        );
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::ParseError { line: 1, .. })
        ));
        write(
            tmp.path(),
            NODE_FILE,
            "1\t\tf\t1\t1\n2\ty\tf\t1\t1\n3\tz\tf\t1\t1\n",
        );
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::ParseError { .. })
        ));
        write(tmp.path(), NODE_FILE, "x\ty\tf\t1\t1\n");
        assert!(matches!(
            load_facts(tmp.path()),
            Err(LoadError::ParseError { .. })
        ));
    }

    #[test]
    fn listings_are_sorted() {
        let fb = FactBaseBuilder::new()
            .node(1, "a", "f", 1, 1)
            .node(3, "c", "f", 1, 1)
            .source(3)
            .source(1)
            .build()
            .unwrap();
        let ids: Vec<_> = fb.list_sources().into_iter().map(|(id, _)| id.0).collect();
        assert_eq!(ids, vec![1, 3]);
        assert!(fb.list_sinks().is_empty());
    }

    #[test]
    fn lookup_and_signature_round_trip() {
        let tmp = three_node_dir();
        let fb = load_facts(tmp.path()).unwrap();
        assert_eq!(fb.node(NodeId(1)).unwrap().label, "user.getSSN()");
        assert!(fb.node(NodeId(42)).is_none());
        let raw = fs::read_to_string(tmp.path().join(LIBRARY_MODEL_FILE)).unwrap();
        let sig = raw.trim_end_matches('\n').split('\t').nth(1).unwrap();
        assert_eq!(fb.api(ApiId(7)).unwrap().signature, sig);
    }

    #[test]
    fn write_then_load_is_identity() {
        let tmp = three_node_dir();
        let fb = load_facts(tmp.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        fb.write_facts(out.path()).unwrap();
        assert_eq!(load_facts(out.path()).unwrap(), fb);
    }

    #[test]
    fn self_loops_and_parallel_edges_allowed() {
        let fb = FactBaseBuilder::new()
            .node(1, "a", "f", 1, 1)
            .node(2, "b", "f", 1, 1)
            .edge(1, 1, 1)
            .edge(2, 1, 2)
            .edge(3, 1, 2)
            .build()
            .unwrap();
        assert_eq!(fb.counts().edges, 3);
        let slot = fb.slot(NodeId(1)).unwrap();
        let order: Vec<_> = fb.index.fwd_all[slot].iter().map(|a| a.edge).collect();
        // targets 1 then 2, edge ids ascending within a target
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn node_can_be_source_and_sink() {
        let fb = FactBaseBuilder::new()
            .node(1, "a", "f", 1, 1)
            .source(1)
            .sink(1)
            .build()
            .unwrap();
        assert!(fb.is_source(NodeId(1)) && fb.is_sink(NodeId(1)));
    }
}
