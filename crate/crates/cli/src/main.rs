//! `snomed-kg`: RF2 ingestion, graph building, knowledge paths, dataset
//! generation and evaluation from one binary.
//!
//! Data goes to stdout or `--out`; logs and errors go to stderr. Errors are a
//! single JSON object and the exit code says what kind: 2 usage, 3 data,
//! 4 I/O, 5 backend or network.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use commands::*;
use config::PipelineConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "snomed-kg", version, about = "SNOMED CT knowledge-graph and dataset toolchain")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More logging on stderr (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a release and report the snapshot and composites.
    Ingest(IngestArgs),
    /// Fetch concepts from a terminology server into RF2 files.
    Fetch(FetchArgs),
    /// Build the graph from a release and export it as bulk CSV.
    BuildGraph(BuildGraphArgs),
    /// Check ID consistency, redundant edges and connectivity pairs.
    Validate(ValidateArgs),
    /// Match seed terms and print the knowledge paths from them.
    QueryPath(QueryPathArgs),
    /// Generate a JSONL dataset from case tables.
    GenDataset(GenDatasetArgs),
    /// Convert a Parquet or CSV table to JSONL.
    Convert(ConvertArgs),
    /// Score candidate texts against references.
    Evaluate(EvaluateArgs),
    /// Fuse two diagnosis distributions; optionally score gating matrices.
    Fuse(FuseArgs),
    /// Print graph statistics.
    Stats(StatsArgs),
    /// Write a synthetic fixture: release, aliases, pairs, case tables, config.
    GenFixture(GenFixtureArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Fetch(_) => "fetch",
            Command::BuildGraph(_) => "build-graph",
            Command::Validate(_) => "validate",
            Command::QueryPath(_) => "query-path",
            Command::GenDataset(_) => "gen-dataset",
            Command::Convert(_) => "convert",
            Command::Evaluate(_) => "evaluate",
            Command::Fuse(_) => "fuse",
            Command::Stats(_) => "stats",
            Command::GenFixture(_) => "gen-fixture",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => ingest(a, &mut config),
        Command::Fetch(a) => fetch(a, &mut config),
        Command::BuildGraph(a) => build_graph(a, &mut config),
        Command::Validate(a) => validate(a, &mut config),
        Command::QueryPath(a) => query_path(a, &mut config),
        Command::GenDataset(a) => gen_dataset(a, &mut config),
        Command::Convert(a) => convert(a, &mut config),
        Command::Evaluate(a) => evaluate(a, &mut config),
        Command::Fuse(a) => fuse(a, &mut config),
        Command::Stats(a) => stats(a, &mut config),
        Command::GenFixture(a) => gen_fixture(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::usage(e.to_string().trim_end()).to_json(""));
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let command = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json(command));
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
