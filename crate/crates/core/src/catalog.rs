//! Listing documents shared by the CLI and the HTTP service, so both emit the
//! same bytes for the same fact base.

use serde_json::{json, Value};

use crate::exporter::canonical_json;
use crate::factbase::{FactBase, NodeRecord};

fn doc(v: &Value) -> String {
    format!("{}\n", canonical_json(v))
}

fn node_value(n: &NodeRecord) -> Value {
    json!({
        "id": n.id,
        "label": n.label,
        "file": n.file,
        "line": n.line,
        "column": n.column,
    })
}

/// `[{id,label,file,line,column}]` for every source, ascending by id.
pub fn sources_json(fb: &FactBase) -> String {
    doc(&Value::Array(
        fb.list_sources()
            .iter()
            .map(|(_, n)| node_value(n))
            .collect(),
    ))
}

pub fn sinks_json(fb: &FactBase) -> String {
    doc(&Value::Array(
        fb.list_sinks().iter().map(|(_, n)| node_value(n)).collect(),
    ))
}

/// `[{id,signature}]` for every modeled API, ascending by id.
pub fn apis_json(fb: &FactBase) -> String {
    doc(&Value::Array(
        fb.list_apis()
            .iter()
            .map(|(id, sig)| json!({ "id": id, "signature": sig }))
            .collect(),
    ))
}

/// Nodes whose label contains `needle`.
pub fn find_json(fb: &FactBase, needle: &str) -> String {
    doc(&Value::Array(
        fb.find_by_label(needle)
            .into_iter()
            .map(node_value)
            .collect(),
    ))
}

pub fn health_json(fb: &FactBase) -> String {
    doc(&json!({ "status": "ok", "factCounts": fb.counts() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn listings_are_canonical() {
        let fb = fixtures::g1();
        assert_eq!(
            sources_json(&fb),
            "[{\"column\":22,\"file\":\"src/main/java/app/UserService.java\",\"id\":1,\"label\":\"user.getSSN()\",\"line\":12}]\n"
        );
        assert!(apis_json(&fb)
            .contains("\"signature\":\"com.acme.crypto.Cipher#encrypt(java.lang.String)\""));
        assert_eq!(find_json(&fb, "nothing-like-this"), "[]\n");
    }

    #[test]
    fn health_reports_counts() {
        let h = health_json(&fixtures::g1());
        assert!(h.starts_with("{\"factCounts\":{"));
        assert!(h.contains("\"nodes\":5"));
        assert!(h.contains("\"edges\":4"));
        assert!(h.contains("\"status\":\"ok\""));
    }
}
