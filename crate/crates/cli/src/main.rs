//! `i40sh`: validate, query, ingest and serve Administrative Shell data.
//!
//! Exit status is 0 on success, 1 for violations or query errors and 2 for
//! I/O, syntax and startup errors. Turtle and JSON go to stdout; everything
//! else goes to stderr.

use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use i40sh_core::ingest::{ingest_csv, parse_mapping, RowNodes};
use i40sh_core::query::{eval, parse_query, QueryResult};
use i40sh_core::vocab::VOCABULARY_TTL;
use i40sh_core::{
    canonicalize, canonicalize_query, parse_turtle, serialize_turtle, validate, Graph, Iri,
    ParseDiagnostic, Term, VocabularyDefinition,
};
use i40sh_registry::Registry;

#[derive(Parser)]
#[command(
    name = "i40sh",
    version,
    about = "Semantic Administrative Shell toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a Turtle document against the shell rules.
    Validate(ValidateArgs),
    /// Evaluate a CONSTRUCT or SELECT query over a Turtle document.
    Query(QueryArgs),
    /// Run the registry service.
    Serve(ServeArgs),
    /// Map CSV rows to shell RDF.
    Ingest(IngestArgs),
    /// Print the built-in vocabulary.
    Vocab,
}

#[derive(Args)]
struct ValidateArgs {
    /// Turtle file, or `-` for stdin.
    #[arg(env = "I40SH_FILE")]
    file: PathBuf,
    /// Rewrite variant predicate spellings before validating.
    #[arg(long, env = "I40SH_CANONICALIZE")]
    canonicalize: bool,
    /// Print the report as JSON.
    #[arg(long, env = "I40SH_JSON")]
    json: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, env = "I40SH_DATA")]
    data: PathBuf,
    #[arg(long, env = "I40SH_QUERY")]
    query: PathBuf,
    /// Rewrite variant predicate spellings in both data and query.
    #[arg(long, env = "I40SH_CANONICALIZE")]
    canonicalize: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "I40SH_BIND", default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
    /// 0 picks a free port.
    #[arg(long, env = "I40SH_PORT", default_value_t = 8040)]
    port: u16,
    #[arg(
        long,
        env = "I40SH_BASE_IRI",
        default_value = "http://purl.org/eis/i40c/"
    )]
    base_iri: String,
    /// Loaded at startup when it exists, written on shutdown.
    #[arg(long, env = "I40SH_SNAPSHOT")]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, env = "I40SH_INPUT")]
    input: PathBuf,
    #[arg(long, env = "I40SH_MAPPING")]
    mapping: PathBuf,
    /// Output file; stdout when neither this nor --register is given.
    #[arg(long, env = "I40SH_OUT", conflicts_with = "register")]
    out: Option<PathBuf>,
    /// Registry base URL to POST one document per row to.
    #[arg(long, env = "I40SH_REGISTER")]
    register: Option<String>,
    /// Exit 1 when any row produced a diagnostic.
    #[arg(long, env = "I40SH_STRICT")]
    strict: bool,
}

/// An error that ends the command with the given exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(path: &Path, e: io::Error) -> Self {
        Self {
            code: 2,
            message: format!("{}: {e}", path.display()),
        }
    }

    fn syntax(path: &Path, diags: &[ParseDiagnostic], code: u8) -> Self {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| format!("{}:{d}", path.display()))
            .collect();
        Self {
            code,
            message: lines.join("\n"),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::io(path, e))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
    }
}

fn load_turtle(path: &Path) -> Result<Graph, Failure> {
    parse_turtle(&read_input(path)?).map_err(|d| Failure::syntax(path, &d, 2))
}

fn print(text: &str) -> Outcome {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure {
            code: 2,
            message: format!("stdout: {e}"),
        })?;
    Ok(0)
}

fn cmd_validate(args: ValidateArgs) -> Outcome {
    let mut graph = load_turtle(&args.file)?;
    if args.canonicalize {
        let (canonical, rewrites) = canonicalize(&graph);
        for r in &rewrites {
            eprintln!("rewrote {r}");
        }
        graph = canonical;
    }
    let report = validate(&graph, VocabularyDefinition::builtin());
    if args.json {
        print(&format!("{:#}\n", report.to_json()))?;
    } else {
        print(&format!("{report}\n"))?;
    }
    Ok(if report.conforms() { 0 } else { 1 })
}

fn cmd_query(args: QueryArgs) -> Outcome {
    let mut data = load_turtle(&args.data)?;
    let text = read_input(&args.query)?;
    let mut query = parse_query(&text).map_err(|d| Failure::syntax(&args.query, &d, 1))?;
    if args.canonicalize {
        data = canonicalize(&data).0;
        query = canonicalize_query(&query).0;
    }
    match eval(&data, &query) {
        QueryResult::Graph(g) => print(&serialize_turtle(&g)),
        QueryResult::Solutions(rows) => print(&format!("{:#}\n", rows.to_json())),
    }
}

fn cmd_vocab() -> Outcome {
    print(VOCABULARY_TTL)
}

fn cmd_ingest(args: IngestArgs) -> Outcome {
    let mapping_text = read_input(&args.mapping)?;
    let spec = parse_mapping(&mapping_text).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", args.mapping.display()),
    })?;
    let input = std::fs::File::open(&args.input).map_err(|e| Failure::io(&args.input, e))?;
    let ingested = ingest_csv(io::BufReader::new(input), &spec).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", args.input.display()),
    })?;
    for d in &ingested.diagnostics {
        eprintln!("{}: {d}", args.input.display());
    }
    let row_status = if args.strict && !ingested.diagnostics.is_empty() {
        1
    } else {
        0
    };

    if let Some(base) = &args.register {
        let status = register_rows(base, &ingested.graph, &ingested.rows)?;
        return Ok(status.max(row_status));
    }
    let text = serialize_turtle(&ingested.graph);
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e))?,
        None => {
            print(&text)?;
        }
    }
    Ok(row_status)
}

/// POSTs one document per row: the row subject's description plus, when the
/// mapping declares shells, the shell's.
fn register_rows(base: &str, graph: &Graph, rows: &[RowNodes]) -> Outcome {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let url = format!("{}/components", base.trim_end_matches('/'));
    let mut status = 0;
    for row in rows {
        let mut doc = Graph::with_prefixes(graph.prefixes().clone());
        for node in std::iter::once(&row.subject).chain(&row.shell) {
            doc.extend(
                graph
                    .concise_bounded_description(&Term::Iri(node.clone()))
                    .iter(),
            );
        }
        let mut response = agent
            .post(&url)
            .header("Content-Type", "text/turtle")
            .send(serialize_turtle(&doc))
            .map_err(|e| Failure {
                code: 2,
                message: format!("{url}: {e}"),
            })?;
        let code = response.status().as_u16();
        let location = response
            .headers()
            .get("location")
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_owned();
        if code == 201 {
            eprintln!("{code} {location}");
        } else {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            eprintln!("{code} {}: {body}", row.subject.as_str());
            status = 1;
        }
    }
    Ok(status)
}

fn cmd_serve(args: ServeArgs) -> Outcome {
    let startup = |message: String| Failure { code: 2, message };
    let base = Iri::new(args.base_iri.as_str())
        .map_err(|e| startup(format!("--base-iri {}: {e}", args.base_iri)))?;
    let registry = match &args.snapshot {
        Some(path) if path.exists() => Registry::from_snapshot(base, path)
            .map_err(|e| startup(format!("{}: {e}", path.display())))?,
        _ => Registry::new(base),
    };
    let registry = Arc::new(registry);

    let runtime = tokio::runtime::Runtime::new().map_err(|e| startup(e.to_string()))?;
    runtime.block_on(async {
        let addr = SocketAddr::new(args.bind, args.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| startup(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| startup(e.to_string()))?;
        eprintln!("listening on http://{local}");
        i40sh_registry::serve(listener, registry.clone(), shutdown_signal())
            .await
            .map_err(|e| startup(e.to_string()))
    })?;

    if let Some(path) = &args.snapshot {
        registry
            .save_snapshot(path)
            .map_err(|e| Failure::io(path, e))?;
        eprintln!("snapshot written to {}", path.display());
    }
    Ok(0)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = terminate => {}
    }
    tracing::info!("shutting down");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("I40SH_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();

    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Query(args) => cmd_query(args),
        Command::Serve(args) => cmd_serve(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Vocab => cmd_vocab(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
