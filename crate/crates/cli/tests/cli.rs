use std::path::PathBuf;

use tracelens_cli::run;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tracelens(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("tracelens").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn whyflow_json_has_one_path() {
    let (code, out, err) = tracelens(&[
        "query",
        "whyflow",
        "--source",
        "1",
        "--sink",
        "4",
        "--facts",
        &fixture("g1"),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["answer"]["paths"].as_array().unwrap().len(), 1);
    assert_eq!(v["truncated"], false);
    assert!(out.ends_with("}\n"));
}

#[test]
fn listings_are_ascending() {
    let (code, out, _) = tracelens(&[
        "list",
        "sinks",
        "--facts",
        &fixture("g4"),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let ids: Vec<u64> = serde_json::from_str::<serde_json::Value>(&out)
        .unwrap()
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, [4, 5, 6, 7]);
    let (_, table, _) = tracelens(&["list", "apis", "--facts", &fixture("g4")]);
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn find_by_label_substring() {
    let (code, out, _) = tracelens(&["find", "--label", "encrypt", "--facts", &fixture("g1")]);
    assert_eq!(code, 0);
    assert!(out.contains("encrypt(ssn)"));
    let (_, none, _) = tracelens(&["find", "--label", "zzz", "--facts", &fixture("g1")]);
    assert_eq!(none, "(none)\n");
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("answer.dot");
    let (code, out, _) = tracelens(&[
        "query",
        "whynot",
        "--source",
        "1",
        "--sink",
        "4",
        "--facts",
        &fixture("g2"),
        "--format",
        "dot",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let dot = std::fs::read_to_string(path).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("style=dashed"));
}

#[test]
fn table_notes_truncation() {
    let (code, out, _) = tracelens(&[
        "query",
        "count-paths",
        "--source",
        "1",
        "--sink",
        "4",
        "--max-paths",
        "1",
        "--facts",
        &fixture("diamond"),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("paths: 1"));
    assert!(out.contains("truncated"));
}

#[test]
fn domain_errors_exit_1_usage_errors_exit_2() {
    let g2 = fixture("g2");
    let (code, out, err) = tracelens(&[
        "query", "whyflow", "--source", "1", "--sink", "4", "--facts", &g2,
    ]);
    assert_eq!((code, out.as_str()), (1, ""));
    assert!(err.contains("\"code\":\"no_flow\""));
    let (code, _, err) = tracelens(&[
        "query", "whyflow", "--source", "9999", "--sink", "4", "--facts", &g2,
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown_id"));
    let (code, _, _) = tracelens(&["query", "sideways", "--facts", &g2]);
    assert_eq!(code, 2);
    let (code, _, _) = tracelens(&["list", "sources"]);
    assert_eq!(code, 2);
    let (code, out, _) = tracelens(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Usage"));
}

#[test]
fn synth_writes_reference_scale_facts() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("facts");
    let (code, out, _) = tracelens(&["synth", "--out", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("8101 nodes, 6901 edges"));
    let fb = tracelens_core::load_facts(&target).unwrap();
    assert_eq!(fb.counts().sinks, 265);
}
