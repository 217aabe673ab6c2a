//! `semint` — operator tooling for the semantic integration middleware.
//!
//! ```text
//! semint run    --config <file>                 start the REST service
//! semint replay --scenario <file> --config <file> [--out <file>]
//! semint query  --store <triples-file> "<sparql>"
//! ```

mod replay;

use anyhow::Context;
use clap::{Parser, Subcommand};
use semint_core::ontology::{parse_select, select};
use semint_core::publish::serve;
use semint_core::store::TripleStore;
use semint_core::Config;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "semint", version, about = "Semantic data-integration middleware")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start the REST service and block until interrupted.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario through the full pipeline offline and report the
    /// composite events and recommendations.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Write the recommendations JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a SPARQL-subset SELECT against a persisted triple file.
    Query {
        #[arg(long)]
        store: PathBuf,
        query: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => exit_on_error(run(&config), 1),
        Command::Replay {
            scenario,
            config,
            out,
        } => exit_on_error(replay::replay(&scenario, &config, out.as_deref()), 2),
        Command::Query { store, query } => exit_on_error(run_query(&store, &query), 2),
    }
}

fn exit_on_error(result: anyhow::Result<()>, code: u8) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn run(config_path: &PathBuf) -> anyhow::Result<()> {
    let config = Config::load(config_path)
        .with_context(|| format!("loading config {}", config_path.display()))?;
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime.block_on(async {
        let handle = serve(config).await?;
        eprintln!("listening on http://{}", handle.addr());
        tokio::signal::ctrl_c().await.context("waiting for ctrl-c")?;
        eprintln!("shutting down");
        handle.shutdown().await;
        Ok(())
    })
}

fn run_query(store_path: &PathBuf, query_text: &str) -> anyhow::Result<()> {
    let store = TripleStore::load(store_path)
        .with_context(|| format!("loading triple store {}", store_path.display()))?;
    let query = parse_select(query_text).context("parsing query")?;
    let table = select(&store, &query).context("evaluating query")?;
    let header: Vec<String> = table.vars.iter().map(|v| format!("?{v}")).collect();
    let mut stdout = io::BufWriter::new(io::stdout().lock());
    let mut emit = |line: String| -> io::Result<()> { writeln!(stdout, "{line}") };
    let mut result = emit(header.join("\t"));
    for row in table.rendered_rows() {
        if result.is_err() {
            break;
        }
        result = emit(row.join("\t"));
    }
    match result {
        // Downstream consumers like `head` may close the pipe early.
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing results"),
    }
}
