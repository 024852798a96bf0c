//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! Run with `cargo test -p tracelens-cli --test acceptance`.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Request};
use http_body_util::BodyExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;
use tracelens_core::exporter::to_graph_payload;
use tracelens_core::queries;
use tracelens_core::synth::{generate, SynthConfig};
use tracelens_core::{
    load_facts, reachable_set, render_json, to_dot, ApiId, EnumLimits, FactBase, FactBaseBuilder,
    NodeId, Overlay, QueryKind, QueryParams, QueryRequest, QueryResult, Role,
};
use tracelens_oracle::{check, random_factbase};
use tracelens_service::{router, ServiceConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn tracelens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracelens"))
        .args(args)
        .output()
        .expect("run tracelens")
}

fn error_code(bytes: &[u8]) -> String {
    let v: serde_json::Value = serde_json::from_slice(bytes).unwrap_or_default();
    v["error"]["code"].as_str().unwrap_or("").to_owned()
}

fn http(fb: Arc<FactBase>, req: Request<Body>) -> (u16, Vec<u8>) {
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        let resp = router(fb, &ServiceConfig::default())
            .unwrap()
            .oneshot(req)
            .await
            .unwrap();
        let status = resp.status().as_u16();
        let body = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, body)
    })
}

fn post_query(fb: Arc<FactBase>, body: &str) -> (u16, Vec<u8>) {
    let req = Request::post("/api/query")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap();
    http(fb, req)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (mut graphs, mut comparisons, mut cyclic) = (0, 0, 0);
    for seed in 0..256u64 {
        let fb = random_factbase(&mut ChaCha8Rng::seed_from_u64(seed), 12, 24);
        let c = tracelens_core::condense(&fb, &Overlay::empty()).unwrap();
        if c.components.len() < fb.counts().nodes {
            cyclic += 1;
        }
        comparisons += check::check_queries(&fb).map_err(|e| format!("seed {seed}: {e}"))?;
        comparisons += check::check_engine(&fb).map_err(|e| format!("seed {seed}: {e}"))?;
        graphs += 1;
    }
    let took = start.elapsed();
    ensure!(
        cyclic > 0 && cyclic < graphs,
        "corpus not mixed: {cyclic} cyclic of {graphs}"
    );
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(format!(
        "{graphs} graphs ({cyclic} cyclic), {comparisons} comparisons, {:.1}s",
        took.as_secs_f64()
    ))
}

fn figure_fidelity() -> Outcome {
    let l = EnumLimits::default();
    let n = NodeId;

    let g1 = load_facts(fixture("g1")).map_err(|e| e.to_string())?;
    let a = queries::why_flow(&g1, n(1), n(4), l).map_err(|e| e.to_string())?;
    let apis: Vec<&str> = a
        .apis_on_paths
        .iter()
        .map(|r| r.signature.as_str())
        .collect();
    ensure!(
        apis == ["com.acme.crypto.Cipher#encrypt(java.lang.String)"],
        "G1 apis {apis:?}"
    );
    let nodes: Vec<u64> = a.paths.paths[0].nodes.iter().map(|x| x.0).collect();
    ensure!(
        a.paths.paths.len() == 1 && nodes == [1, 2, 3, 4],
        "G1 path {nodes:?}"
    );
    let result = QueryResult::WhyFlow {
        source: n(1),
        sink: n(4),
        answer: a,
    };
    let payload = to_graph_payload(&g1, &result);
    let roles: Vec<Role> = payload.nodes.iter().map(|p| p.role).collect();
    ensure!(
        roles == [Role::Source, Role::Intermediate, Role::Api, Role::Sink],
        "G1 roles {roles:?}"
    );
    ensure!(
        payload.edges.len() == 3 && payload.edges.iter().all(|e| e.on_answer_path),
        "G1 edges"
    );

    let g2 = load_facts(fixture("g2")).map_err(|e| e.to_string())?;
    let a = queries::why_not_flow(&g2, n(1), n(4), l).map_err(|e| e.to_string())?;
    let apis: Vec<u64> = a.blocking_apis.iter().map(|r| r.id.0).collect();
    ensure!(apis == [2], "G2 blocking {apis:?}");
    ensure!(
        a.blocking_apis[0].signature.contains("String#format"),
        "G2 signature"
    );
    let result = QueryResult::WhyNot {
        source: n(1),
        sink: n(4),
        answer: a,
    };
    let dot = to_dot(&to_graph_payload(&g2, &result));
    let dashed: Vec<&str> = dot.lines().filter(|l| l.contains("style=dashed")).collect();
    ensure!(
        dashed.len() == 1 && dashed[0].contains("n2 -> n3"),
        "G2 dot {dashed:?}"
    );

    let g3 = load_facts(fixture("g3")).map_err(|e| e.to_string())?;
    let (a, paths) =
        queries::global_impact_with_paths(&g3, n(1), n(6), l).map_err(|e| e.to_string())?;
    let ranking: Vec<(u64, usize)> = a.ranking.iter().map(|r| (r.api.0, r.score)).collect();
    ensure!(
        paths.paths.len() == 4,
        "G3 path count {}",
        paths.paths.len()
    );
    ensure!(ranking == [(3, 3), (4, 1)], "G3 ranking {ranking:?}");

    let g4 = load_facts(fixture("g4")).map_err(|e| e.to_string())?;
    let a = queries::affected_sinks(&g4, n(1), ApiId(5)).map_err(|e| e.to_string())?;
    let killed: Vec<u64> = a.killed.iter().map(|x| x.0).collect();
    let surviving: Vec<u64> = a.surviving.iter().map(|x| x.0).collect();
    ensure!(
        killed == [4, 5] && surviving == [6, 7] && !a.api_unused,
        "G4 {killed:?} {surviving:?}"
    );
    let unused = queries::affected_sinks(&g4, n(1), ApiId(6)).map_err(|e| e.to_string())?;
    ensure!(
        unused.api_unused && unused.killed.is_empty(),
        "G4 unused api"
    );

    Ok("G1 enc pass-through, G2 fmt blocking + dashed edge, G3 extract 3 > std 1, G4 killed {4,5} surviving {6,7}".into())
}

fn monotonicity() -> Outcome {
    let mut checks = 0;
    for seed in 0..256u64 {
        let fb = random_factbase(&mut ChaCha8Rng::seed_from_u64(seed), 12, 24);
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        checks +=
            check::check_monotonicity(&fb, &mut rng, 8).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{checks} reachable-set comparisons, 0 violations"))
}

fn scale_latency() -> Outcome {
    let fb = generate(&SynthConfig::reference_scale()).map_err(|e| e.to_string())?;
    let c = fb.counts();
    ensure!(
        (c.nodes, c.edges, c.sources, c.sinks, c.apis) == (8101, 6901, 26, 265, 85),
        "counts {c:?}"
    );
    let sources: Vec<NodeId> = fb.sources().iter().copied().collect();
    let none = Overlay::empty();
    // (source, sink) pairs with a flow, plus every source against a sink it
    // cannot reach, so both branches of each template get timed.
    let mut flows = Vec::new();
    let mut blocked = Vec::new();
    for s in &sources {
        let reach = reachable_set(&fb, &none, *s).unwrap();
        let mut reached: Vec<NodeId> = fb
            .sinks()
            .iter()
            .copied()
            .filter(|t| reach.contains(t))
            .collect();
        reached.truncate(4);
        flows.extend(reached.iter().map(|t| (*s, *t)));
        if let Some(t) = fb.sinks().iter().find(|t| !reach.contains(t)) {
            blocked.push((*s, *t));
        }
    }
    ensure!(!flows.is_empty() && !blocked.is_empty(), "no query pairs");

    let mut requests: Vec<(QueryKind, QueryParams)> = Vec::new();
    let p = |s: NodeId, t: NodeId| QueryParams {
        source: Some(s),
        sink: Some(t),
        ..Default::default()
    };
    for (s, t) in &flows {
        for k in [
            QueryKind::WhyFlow,
            QueryKind::GlobalImpact,
            QueryKind::CountPaths,
            QueryKind::CountApis,
        ] {
            requests.push((k, p(*s, *t)));
        }
    }
    for (s, t) in &blocked {
        requests.push((QueryKind::WhyNot, p(*s, *t)));
    }
    for pair in flows.windows(2).filter(|w| w[0].0 == w[1].0) {
        requests.push((
            QueryKind::DivergentSinks,
            QueryParams {
                source: Some(pair[0].0),
                sink_a: Some(pair[0].1),
                sink_b: Some(pair[1].1),
                ..Default::default()
            },
        ));
    }
    for (i, (a, t)) in flows.iter().enumerate() {
        if let Some((b, _)) = flows[i + 1..].iter().find(|(b, u)| b != a && u == t) {
            requests.push((
                QueryKind::DivergentSources,
                QueryParams {
                    source_a: Some(*a),
                    source_b: Some(*b),
                    sink: Some(*t),
                    ..Default::default()
                },
            ));
        }
    }
    // sources paired with a sink they share are rare; fall back to any two
    // sources so the template is always timed (NotReachable is an answer too)
    requests.push((
        QueryKind::DivergentSources,
        QueryParams {
            source_a: Some(sources[0]),
            source_b: Some(sources[1]),
            sink: Some(flows[0].1),
            ..Default::default()
        },
    ));
    for s in &sources {
        for api in 1..=85u64 {
            requests.push((
                QueryKind::AffectedSinks,
                QueryParams {
                    source: Some(*s),
                    api: Some(ApiId(api)),
                    ..Default::default()
                },
            ));
        }
    }
    requests.push((QueryKind::BranchPoints, QueryParams::default()));
    requests.push((
        QueryKind::BranchPoints,
        QueryParams {
            sanitize: vec![ApiId(1)],
            activate: vec![ApiId(2)],
            ..Default::default()
        },
    ));

    let mut worst: Vec<(QueryKind, Duration, usize, usize)> = QueryKind::ALL
        .iter()
        .map(|k| (*k, Duration::ZERO, 0, 0))
        .collect();
    for (kind, params) in requests {
        let req = QueryRequest::new(kind, params);
        let start = Instant::now();
        let out = render_json(&fb, &req);
        let took = start.elapsed();
        let slot = worst.iter_mut().find(|w| w.0 == kind).unwrap();
        slot.1 = slot.1.max(took);
        slot.2 += 1;
        if out
            .map(|d| d.contains("\"truncated\":true"))
            .unwrap_or(false)
        {
            slot.3 += 1;
        }
    }
    let mut summary = Vec::new();
    for (kind, max, runs, truncated) in &worst {
        ensure!(*runs > 0, "{kind} never ran");
        let budget = match kind {
            QueryKind::AffectedSinks | QueryKind::CountApis | QueryKind::BranchPoints => {
                Duration::from_secs(1)
            }
            _ => Duration::from_secs(5),
        };
        ensure!(*max < budget, "{kind} took {max:?} (budget {budget:?})");
        summary.push(format!(
            "{kind} {}ms/{runs}{}",
            max.as_millis(),
            if *truncated > 0 {
                format!(" ({truncated} truncated)")
            } else {
                String::new()
            }
        ));
    }
    Ok(format!("worst case per template: {}", summary.join(", ")))
}

fn determinism() -> Outcome {
    let dir = |n: &str| fixture(n).to_string_lossy().into_owned();
    let corpus: Vec<Vec<String>> = [
        ("g1", "query whyflow --source 1 --sink 4"),
        ("g1", "query count-apis --source 1 --sink 4"),
        (
            "g1",
            "query divergent-sinks --source 1 --sink-a 4 --sink-b 5",
        ),
        ("g2", "query whynot --source 1 --sink 4"),
        ("g3", "query global-impact --source 1 --sink 6"),
        ("g3", "query count-paths --source 1 --sink 6"),
        ("g4", "query affected-sinks --source 1 --api 5"),
        ("g4", "query branch-points"),
        (
            "merge",
            "query divergent-sources --source-a 1 --source-b 2 --sink 4",
        ),
        (
            "diamond",
            "query count-paths --source 1 --sink 4 --max-paths 1",
        ),
    ]
    .iter()
    .flat_map(|(fx, q)| {
        ["json", "table", "dot"].map(|f| {
            let mut v: Vec<String> = q.split(' ').map(String::from).collect();
            v.extend(["--facts".into(), dir(fx), "--format".into(), f.into()]);
            v
        })
    })
    .chain(["sources", "sinks", "apis"].map(|w| {
        vec![
            "list".into(),
            w.into(),
            "--facts".into(),
            dir("g4"),
            "--format".into(),
            "json".into(),
        ]
    }))
    .chain([vec![
        "find".into(),
        "--label".into(),
        "ssn".into(),
        "--facts".into(),
        dir("g1"),
    ]])
    .collect();

    let mut matched = 0;
    for args in &corpus {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let runs: Vec<Output> = (0..3).map(|_| tracelens(&argv)).collect();
        ensure!(
            runs[0].status.success(),
            "{argv:?} failed: {}",
            String::from_utf8_lossy(&runs[0].stderr)
        );
        ensure!(
            runs.iter()
                .all(|r| r.stdout == runs[0].stdout && r.status == runs[0].status),
            "{argv:?} differs across runs"
        );
        if argv[0] == "query" && argv.ends_with(&["json"]) {
            let fx = &args[args.iter().position(|a| a == "--facts").unwrap() + 1];
            let fb = Arc::new(load_facts(fx).map_err(|e| e.to_string())?);
            let body = request_body(&argv);
            let (status, http_body) = post_query(fb, &body);
            ensure!(status == 200, "{body} -> {status}");
            ensure!(
                http_body == runs[0].stdout,
                "{argv:?}: CLI and service bodies differ"
            );
            matched += 1;
        }
    }
    Ok(format!(
        "{} invocations x3 byte-identical; {matched} CLI/service JSON pairs identical",
        corpus.len()
    ))
}

/// Translates CLI query arguments into the equivalent HTTP request body.
fn request_body(argv: &[&str]) -> String {
    let mut params = serde_json::Map::new();
    let mut limits = serde_json::Map::new();
    let mut i = 2;
    while i < argv.len() {
        let key = argv[i].trim_start_matches("--");
        let val = argv[i + 1];
        match key {
            "facts" | "format" => {}
            "max-paths" => {
                limits.insert("maxPaths".into(), val.parse::<u64>().unwrap().into());
            }
            "max-depth" => {
                limits.insert("maxDepth".into(), val.parse::<u64>().unwrap().into());
            }
            k => {
                let camel = match k {
                    "sink-a" => "sinkA",
                    "sink-b" => "sinkB",
                    "source-a" => "sourceA",
                    "source-b" => "sourceB",
                    other => other,
                };
                params.insert(camel.into(), val.parse::<u64>().unwrap().into());
            }
        }
        i += 2;
    }
    serde_json::json!({ "type": argv[1], "params": params, "limits": limits }).to_string()
}

fn error_contract() -> Outcome {
    let g1 = fixture("g1").to_string_lossy().into_owned();
    let g2 = fixture("g2").to_string_lossy().into_owned();
    let split = tempfile::tempdir().unwrap();
    let mut b = FactBaseBuilder::new();
    b.node(1, "s", "A.java", 1, 1)
        .node(2, "a", "A.java", 2, 1)
        .node(3, "b", "A.java", 3, 1);
    b.edge(1, 1, 2).source(1).sink(2).sink(3);
    b.build().unwrap().write_facts(split.path()).unwrap();
    let split_dir = split.path().to_string_lossy().into_owned();

    // (condition, cli args, http fixture, http body, code, exit, status)
    let cases: Vec<(&str, String, &str, &str, &str, i32, u16)> = vec![
        (
            "UnknownId",
            format!("query whyflow --source 9999 --sink 4 --facts {g1}"),
            "g1",
            r#"{"type":"whyflow","params":{"source":9999,"sink":4}}"#,
            "unknown_id",
            2,
            404,
        ),
        (
            "NotASource",
            format!("query whyflow --source 2 --sink 4 --facts {g1}"),
            "g1",
            r#"{"type":"whyflow","params":{"source":2,"sink":4}}"#,
            "not_a_source",
            1,
            409,
        ),
        (
            "NotASink",
            format!("query whyflow --source 1 --sink 2 --facts {g1}"),
            "g1",
            r#"{"type":"whyflow","params":{"source":1,"sink":2}}"#,
            "not_a_sink",
            1,
            409,
        ),
        (
            "NoFlow",
            format!("query whyflow --source 1 --sink 4 --facts {g2}"),
            "g2",
            r#"{"type":"whyflow","params":{"source":1,"sink":4}}"#,
            "no_flow",
            1,
            409,
        ),
        (
            "FlowExists",
            format!("query whynot --source 1 --sink 4 --facts {g1}"),
            "g1",
            r#"{"type":"whynot","params":{"source":1,"sink":4}}"#,
            "flow_exists",
            1,
            409,
        ),
        (
            "NotReachable",
            format!("query divergent-sinks --source 1 --sink-a 2 --sink-b 3 --facts {split_dir}"),
            "split",
            r#"{"type":"divergent-sinks","params":{"source":1,"sinkA":2,"sinkB":3}}"#,
            "not_reachable",
            1,
            409,
        ),
        (
            "UnknownApi",
            format!("query affected-sinks --source 1 --api 99 --facts {g1}"),
            "g1",
            r#"{"type":"affected-sinks","params":{"source":1,"api":99}}"#,
            "unknown_api",
            2,
            404,
        ),
        (
            "OverlayConflict",
            format!("query branch-points --sanitize 1 --activate 1 --facts {g1}"),
            "g1",
            r#"{"type":"branch-points","params":{"sanitize":[1],"activate":[1]}}"#,
            "overlay_conflict",
            2,
            400,
        ),
        (
            "SameEndpoints",
            format!("query divergent-sinks --source 1 --sink-a 4 --sink-b 4 --facts {g1}"),
            "g1",
            r#"{"type":"divergent-sinks","params":{"source":1,"sinkA":4,"sinkB":4}}"#,
            "same_endpoints",
            2,
            400,
        ),
        (
            "InvalidLimits",
            format!("query whyflow --source 1 --sink 4 --max-paths 0 --facts {g1}"),
            "g1",
            r#"{"type":"whyflow","params":{"source":1,"sink":4},"limits":{"maxPaths":0}}"#,
            "invalid_limits",
            2,
            400,
        ),
        (
            "BadRequest",
            format!("query whyflow --source 1 --facts {g1}"),
            "g1",
            r#"{"type":"whyflow","params":{"source":1}}"#,
            "bad_request",
            2,
            400,
        ),
    ];
    for (name, cli, fx, body, code, exit, status) in &cases {
        let argv: Vec<&str> = cli.split(' ').collect();
        let out = tracelens(&argv);
        ensure!(
            out.status.code() == Some(*exit),
            "{name}: exit {:?}",
            out.status.code()
        );
        ensure!(out.stdout.is_empty(), "{name}: wrote to stdout");
        ensure!(
            error_code(&out.stderr) == *code,
            "{name}: stderr {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let dir = if *fx == "split" {
            split.path().to_path_buf()
        } else {
            fixture(fx)
        };
        let fb = Arc::new(load_facts(&dir).map_err(|e| e.to_string())?);
        let (got, resp) = post_query(fb, body);
        ensure!(got == *status, "{name}: http {got}");
        ensure!(
            error_code(&resp) == *code,
            "{name}: http body {}",
            String::from_utf8_lossy(&resp)
        );
    }

    // DanglingReference: a load error, so exit 2 from the CLI and a refused
    // service startup.
    let bad = tempfile::tempdir().unwrap();
    FactBaseBuilder::new()
        .build()
        .unwrap()
        .write_facts(bad.path())
        .unwrap();
    std::fs::write(bad.path().join("sink.facts"), "7\n").unwrap();
    let bad_dir = bad.path().to_string_lossy().into_owned();
    let out = tracelens(&["list", "sinks", "--facts", &bad_dir]);
    ensure!(
        out.status.code() == Some(2),
        "dangling: exit {:?}",
        out.status.code()
    );
    ensure!(
        error_code(&out.stderr) == "dangling_reference",
        "dangling: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = tracelens(&["serve", "--facts", &bad_dir, "--bind", "127.0.0.1:0"]);
    ensure!(
        out.status.code() == Some(2),
        "dangling serve: exit {:?}",
        out.status.code()
    );
    ensure!(
        error_code(&out.stderr) == "dangling_reference",
        "dangling serve: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let missing = tracelens(&["list", "sources", "--facts", "/nonexistent/facts"]);
    ensure!(
        missing.status.code() == Some(2) && error_code(&missing.stderr) == "missing_file",
        "missing facts"
    );

    Ok(format!(
        "{} query errors + DanglingReference (CLI and serve) + MissingFile mapped",
        cases.len()
    ))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("oracle-equivalence", oracle_equivalence),
        ("figure-fixture-fidelity", figure_fidelity),
        ("monotonicity", monotonicity),
        ("scale-latency", scale_latency),
        ("determinism", determinism),
        ("error-contract-totality", error_contract),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
