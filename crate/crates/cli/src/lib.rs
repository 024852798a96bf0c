//! The `tracelens` command line.
//!
//! Exit codes: 0 on success, 1 when a query's precondition fails on valid
//! input (no flow, not a source, ...), 2 on usage and load errors. Errors are
//! written to stderr as `{"error":{"code","message"}}`.

mod table;

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracelens_core::error::LOAD_ERROR_EXIT;
use tracelens_core::request::{answer, document, LimitsSpec};
use tracelens_core::synth::{generate, SynthConfig};
use tracelens_core::{
    catalog, load_facts, to_dot, ApiId, ErrorBody, FactBase, NodeId, QueryError, QueryKind,
    QueryParams, QueryRequest,
};
use tracelens_service::{serve_factbase, ServiceConfig};

#[derive(Parser, Debug)]
#[command(
    name = "tracelens",
    version,
    about = "Ask why, why not and what if about taint flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List sources, sinks or modeled APIs.
    List {
        what: Catalog,
        #[arg(long)]
        facts: PathBuf,
        #[arg(long, value_enum, default_value_t = ListFormat::Table)]
        format: ListFormat,
    },
    /// Find nodes whose label contains a substring.
    Find {
        #[arg(long)]
        label: String,
        #[arg(long)]
        facts: PathBuf,
        #[arg(long, value_enum, default_value_t = ListFormat::Table)]
        format: ListFormat,
    },
    /// Run one of the query templates.
    Query(QueryArgs),
    /// Serve the HTTP JSON API.
    Serve {
        #[arg(long, env = "TRACELENS_FACTS")]
        facts: PathBuf,
        #[arg(long, env = "TRACELENS_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Origin allowed to call the API from a browser.
        #[arg(long, env = "TRACELENS_ALLOW_ORIGIN")]
        allow_origin: Option<String>,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Write a deterministic synthetic fact directory at real-project scale.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Catalog {
    Sources,
    Sinks,
    Apis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ListFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Dot,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(value_parser = parse_kind)]
    kind: QueryKind,
    #[arg(long)]
    source: Option<u64>,
    #[arg(long)]
    sink: Option<u64>,
    #[arg(long)]
    sink_a: Option<u64>,
    #[arg(long)]
    sink_b: Option<u64>,
    #[arg(long)]
    source_a: Option<u64>,
    #[arg(long)]
    source_b: Option<u64>,
    #[arg(long)]
    api: Option<u64>,
    /// Treat this API as a sanitizer (branch-points only; repeatable).
    #[arg(long)]
    sanitize: Vec<u64>,
    /// Activate plausible edges marked with this API (branch-points only; repeatable).
    #[arg(long)]
    activate: Vec<u64>,
    #[arg(long)]
    max_paths: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    facts: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the answer here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<QueryKind, String> {
    s.parse::<QueryKind>().map_err(|_| {
        let names: Vec<&str> = QueryKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

impl QueryArgs {
    fn request(&self) -> QueryRequest {
        let node = |v: Option<u64>| v.map(NodeId);
        QueryRequest {
            kind: self.kind,
            params: QueryParams {
                source: node(self.source),
                sink: node(self.sink),
                sink_a: node(self.sink_a),
                sink_b: node(self.sink_b),
                source_a: node(self.source_a),
                source_b: node(self.source_b),
                api: self.api.map(ApiId),
                sanitize: self.sanitize.iter().copied().map(ApiId).collect(),
                activate: self.activate.iter().copied().map(ApiId).collect(),
            },
            limits: LimitsSpec {
                max_paths: self.max_paths,
                max_depth: self.max_depth,
            },
        }
    }
}

/// A failure that ends the command: what to print and the exit code.
struct Failure {
    body: ErrorBody,
    exit: i32,
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        Failure {
            body: ErrorBody::from(&e),
            exit: e.exit_code(),
        }
    }
}

impl From<tracelens_core::LoadError> for Failure {
    fn from(e: tracelens_core::LoadError) -> Self {
        Failure {
            body: ErrorBody::from(&e),
            exit: LOAD_ERROR_EXIT,
        }
    }
}

fn io_failure(what: &Path, e: std::io::Error) -> Failure {
    Failure {
        body: ErrorBody {
            code: "io_error",
            message: format!("{}: {e}", what.display()),
        },
        exit: 2,
    }
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version are not errors and belong on stdout
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = err.write_all(f.body.to_json().as_bytes());
            f.exit
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| io_failure(Path::new("<stdout>"), e))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::List {
            what,
            facts,
            format,
        } => {
            let fb = load_facts(&facts)?;
            let text = match (what, format) {
                (Catalog::Sources, ListFormat::Json) => catalog::sources_json(&fb),
                (Catalog::Sinks, ListFormat::Json) => catalog::sinks_json(&fb),
                (Catalog::Apis, ListFormat::Json) => catalog::apis_json(&fb),
                (Catalog::Sources, ListFormat::Table) => {
                    let mut s = String::new();
                    table::nodes(&mut s, fb.list_sources().into_iter().map(|(_, n)| n));
                    s
                }
                (Catalog::Sinks, ListFormat::Table) => {
                    let mut s = String::new();
                    table::nodes(&mut s, fb.list_sinks().into_iter().map(|(_, n)| n));
                    s
                }
                (Catalog::Apis, ListFormat::Table) => {
                    let mut s = String::new();
                    table::apis(
                        &mut s,
                        fb.list_apis().into_iter().map(|(id, sig)| (id.0, sig)),
                    );
                    s
                }
            };
            emit(out, &text)
        }
        Command::Find {
            label,
            facts,
            format,
        } => {
            let fb = load_facts(&facts)?;
            let text = match format {
                ListFormat::Json => catalog::find_json(&fb, &label),
                ListFormat::Table => {
                    let mut s = String::new();
                    table::nodes(&mut s, fb.find_by_label(&label));
                    s
                }
            };
            emit(out, &text)
        }
        Command::Query(q) => {
            let fb = load_facts(&q.facts)?;
            let text = render_query(&fb, &q)?;
            match &q.output {
                Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e)),
                None => emit(out, &text),
            }
        }
        Command::Serve {
            facts,
            bind,
            allow_origin,
            timeout_secs,
        } => {
            let fb = Arc::new(load_facts(&facts)?);
            let config = ServiceConfig {
                bind,
                allow_origin,
                timeout: Duration::from_secs(timeout_secs),
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| io_failure(&facts, e))?;
            rt.block_on(serve_factbase(fb, config))
                .map_err(|e| Failure {
                    body: e.body(),
                    exit: 2,
                })
        }
        Command::Synth { out: dir, seed } => {
            let mut cfg = SynthConfig::reference_scale();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let fb = generate(&cfg)?;
            fb.write_facts(&dir).map_err(|e| io_failure(&dir, e))?;
            let c = fb.counts();
            emit(
                out,
                &format!(
                    "wrote {}: {} nodes, {} edges, {} plausible edges, {} sources, {} sinks, {} apis\n",
                    dir.display(),
                    c.nodes,
                    c.edges,
                    c.plausible_edges,
                    c.sources,
                    c.sinks,
                    c.apis
                ),
            )
        }
    }
}

fn render_query(fb: &FactBase, q: &QueryArgs) -> Result<String, Failure> {
    let req = q.request();
    let (result, payload) = answer(fb, &req)?;
    Ok(match q.format {
        Format::Json => document(&req, &result, &payload),
        Format::Dot => to_dot(&payload),
        Format::Table => table::result(fb, &result),
    })
}
