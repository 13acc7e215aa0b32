//! One function per subcommand.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};
use snomed_kg::dataset::{
    convert_to_jsonl, read_values, write_jsonl, ExpertTagMap, GenBackend, GenError, HttpBackend, MockBackend,
    PromptTemplates, Schema,
};
use snomed_kg::fixture::{write_fixture, FixtureConfig};
use snomed_kg::fusion::{
    evaluate as score_texts, fuse as fuse_distributions, score_experts, sweep_weights, BagOfWords, DiagnosisDistribution,
    FusionConfig, GatingMatrix, ScoreMetric, Strategy, TokenizerOptions,
};
use snomed_kg::graph::{export_bulk_csv, AliasTable, LoaderOptions, StoreOptions};
use snomed_kg::parser::write_file;
use snomed_kg::paths::{knowledge_vector, RenderMode, SearchLimits};
use snomed_kg::pipeline::{build_dataset, ingest as ingest_release, load_cases, load_graph, open_store, DatasetOptions};
use snomed_kg::retry::RetryPolicy;
use snomed_kg::rf2::SctId;
use snomed_kg::snowstorm::{fetch_all, Checkpoint, SnowstormClient};
use snomed_kg::validator::{validate as run_validation, Direction, PairList, ValidateOptions};

use crate::config::{require, PipelineConfig};
use crate::error::{CliError, Kind};

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("outputs serialize") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn aliases(flag: Option<PathBuf>, config: &PipelineConfig) -> Result<AliasTable, CliError> {
    let mut table = AliasTable::default();
    if let Some(path) = flag.or_else(|| config.paths.aliases.clone()) {
        table.extend_from_file(&path).map_err(|e| CliError::usage(format!("aliases: {e}")))?;
    }
    Ok(table)
}

fn parse_with<T: std::str::FromStr<Err = String>>(value: &str, what: &str) -> Result<T, CliError> {
    value.parse().map_err(|e: String| CliError::usage(format!("{what}: {e}")))
}

fn sct_ids(values: &[u64]) -> Result<Vec<SctId>, CliError> {
    values.iter().map(|v| SctId::new(*v).map_err(|e| CliError::usage(format!("concept id {v}: {e}")))).collect()
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    release: Option<PathBuf>,
    /// Parser threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the composites as JSON Lines.
    #[arg(long, value_name = "FILE")]
    composites: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn ingest(a: IngestArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let release = require(a.release, &config.paths.release, "release", "release")?;
    if let Some(w) = a.workers {
        config.graph.parse_workers = w;
    }
    config.check()?;
    let ingested = ingest_release(&release, config.graph.parse_workers)?;
    if let Some(path) = &a.composites {
        write_jsonl(path, &ingested.composites).map_err(|e| CliError::io(path, e))?;
    }
    emit(&ingested.report, a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// File of concept ids, one per line (`#` starts a comment).
    #[arg(long)]
    ids: Option<PathBuf>,
    /// A concept id; repeatable.
    #[arg(long = "id")]
    id: Vec<u64>,
    /// Server base URL.
    #[arg(long)]
    server: Option<String>,
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Resume file; completed concepts are not fetched again.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Directory for the RF2 files.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn fetch(a: FetchArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let out = require(a.out, &config.paths.release, "out", "release")?;
    if let Some(s) = a.server {
        config.server.base_url = s;
    }
    if let Some(b) = a.branch {
        config.server.branch = b;
    }
    if let Some(c) = a.concurrency {
        config.fetch.concurrency = c;
    }
    config.check()?;
    let mut ids = sct_ids(&a.id)?;
    if let Some(path) = &a.ids {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            ids.push(line.parse().map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), n + 1)))?);
        }
    }
    if ids.is_empty() {
        return Err(CliError::usage("no concept ids given (--id or --ids)"));
    }
    let client = SnowstormClient::new(config.server.clone())?;
    let checkpoint = match &a.checkpoint {
        Some(path) => Some(Checkpoint::open(path).map_err(|e| CliError::io(path, e))?),
        None => None,
    };
    let (rows, report) = fetch_all(&client, &ids, config.fetch.concurrency, checkpoint.as_ref().map(|(c, done)| (c, done.clone())));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let write = |name: &str, r: std::io::Result<()>| r.map_err(|e| CliError::io(&out.join(name), e));
    write("concepts", write_file(&out.join("sct2_Concept_Snapshot_INT.txt"), &rows.concepts))?;
    write("descriptions", write_file(&out.join("sct2_Description_Snapshot-en_INT.txt"), &rows.descriptions))?;
    write("relationships", write_file(&out.join("sct2_Relationship_Snapshot_INT.txt"), &rows.relationships))?;
    emit(&report, None)?;
    if report.fetched == 0 {
        return Err(CliError::new(Kind::Backend, format!("none of {} concepts could be fetched", report.requested)));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    #[arg(long)]
    release: Option<PathBuf>,
    /// Directory for nodes.csv and edges.csv.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    flush_threshold: Option<usize>,
    #[arg(long)]
    shards: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Retries per failed batch.
    #[arg(long)]
    retries: Option<u32>,
    /// Keep duplicate (source, type, destination) edges.
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

pub fn build_graph(a: BuildGraphArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let release = require(a.release, &config.paths.release, "release", "release")?;
    let store_dir = require(a.store, &config.paths.store, "store", "store")?;
    let g = &mut config.graph;
    g.flush_threshold = a.flush_threshold.unwrap_or(g.flush_threshold);
    g.shards = a.shards.unwrap_or(g.shards);
    g.workers = a.workers.unwrap_or(g.workers);
    g.retries = a.retries.unwrap_or(g.retries);
    g.dedup &= !a.no_dedup;
    config.check()?;
    let aliases = aliases(a.aliases, config)?;
    let g = &config.graph;

    let ingested = ingest_release(&release, g.parse_workers)?;
    let store_options = StoreOptions {
        dedup_edges: g.dedup,
        retry: RetryPolicy { max_attempts: g.retries + 1, ..Default::default() },
    };
    let loader = LoaderOptions { flush_threshold: g.flush_threshold, shards: g.shards, workers: g.workers };
    let (store, outcome) = load_graph(&ingested, &aliases, store_options, loader);
    if let Some(first) = outcome.errors.first() {
        return Err(CliError::data(format!("{} batch error(s), first: {first}", outcome.errors.len())));
    }
    fs::create_dir_all(&store_dir).map_err(|e| CliError::io(&store_dir, e))?;
    let (nodes, edges) = export_bulk_csv(&store, &store_dir)?;
    emit(
        &json!({
            "composites": ingested.report.composites,
            "dropped": ingested.report.dropped.dropped.len(),
            "rows_skipped": ingested.report.rows_skipped,
            "load": outcome.report,
            "stats": store.stats(),
            "nodes_csv": nodes,
            "edges_csv": edges,
        }),
        None,
    )
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// TOML file of `[[pairs]]` that must be connected.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Also require every edge type to have an alias.
    #[arg(long)]
    strict: bool,
    /// Remove redundant edges and rewrite the store.
    #[arg(long)]
    eliminate: bool,
    /// Ignore edge direction when checking pairs.
    #[arg(long)]
    undirected: bool,
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn validate(a: ValidateArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let store_dir = require(a.store, &config.paths.store, "store", "store")?;
    let aliases = aliases(a.aliases, config)?;
    let pairs = match a.pairs.or_else(|| config.paths.pairs.clone()) {
        Some(path) => PairList::from_file(&path).map_err(CliError::usage)?,
        None => PairList::default(),
    };
    let store = open_store(&store_dir, &aliases)?;
    let options = ValidateOptions {
        strict: a.strict,
        eliminate: a.eliminate,
        direction: if a.undirected { Direction::Undirected } else { Direction::Directed },
    };
    let report = run_validation(&store, &aliases, &pairs, &options).map_err(CliError::data)?;
    if a.eliminate {
        export_bulk_csv(&store, &store_dir)?;
    }
    emit(&report, a.out.as_deref())?;
    let failed = !report.id_inconsistencies.is_empty()
        || !report.unreachable_pairs.is_empty()
        || (!a.eliminate && !report.redundant_edges.is_empty());
    if failed {
        return Err(CliError::data(format!(
            "{} id inconsistencies, {} redundant edges, {} unreachable pairs",
            report.id_inconsistencies.len(),
            report.redundant_edges.len(),
            report.unreachable_pairs.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct QueryPathArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// A seed term or free text to match seeds in; repeatable.
    #[arg(long)]
    seed: Vec<String>,
    /// Free text to match seeds in.
    #[arg(long)]
    text: Option<String>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_paths: Option<usize>,
    /// `with-relations` or `concepts-only`.
    #[arg(long)]
    render: Option<String>,
    /// Only follow these relationship types; repeatable.
    #[arg(long = "type")]
    types: Vec<u64>,
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn query_path(a: QueryPathArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let store_dir = require(a.store, &config.paths.store, "store", "store")?;
    let s = &mut config.search;
    s.max_depth = a.max_depth.unwrap_or(s.max_depth);
    s.max_paths = a.max_paths.unwrap_or(s.max_paths);
    if let Some(r) = a.render {
        s.render = r;
    }
    config.check()?;
    let mode: RenderMode = parse_with(&config.search.render, "render")?;
    let mut texts = a.seed;
    texts.extend(a.text);
    let text = texts.join("\n");
    if text.trim().is_empty() {
        return Err(CliError::usage("nothing to match: give --seed or --text"));
    }
    let filter: Option<BTreeSet<SctId>> = (!a.types.is_empty()).then(|| sct_ids(&a.types)).transpose()?.map(|v| v.into_iter().collect());
    let aliases = aliases(a.aliases, config)?;
    let store = open_store(&store_dir, &aliases)?;
    let limits = SearchLimits { max_depth: config.search.max_depth, max_paths: config.search.max_paths };
    let kv = knowledge_vector(&store, &aliases, &text, filter.as_ref(), limits);
    emit(&kv.to_json(mode), a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long)]
    diagnoses: Option<PathBuf>,
    #[arg(long)]
    records: Option<PathBuf>,
    /// Graph to draw knowledge paths from.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Do not inject knowledge paths even when a store is configured.
    #[arg(long)]
    no_knowledge: bool,
    /// `platypus`, `esft-train` or `esft-val`.
    #[arg(long)]
    schema: Option<String>,
    /// `mock` or `http`.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// TOML `[expert_tags]` table: clinic type → tags.
    #[arg(long)]
    expert_tags: Option<PathBuf>,
    /// Directory with input.txt, output.txt and instruction.txt prompts.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Output JSONL file.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn gen_dataset(a: GenDatasetArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let diagnoses = require(a.diagnoses, &config.paths.diagnoses, "diagnoses", "diagnoses")?;
    let records = require(a.records, &config.paths.records, "records", "records")?;
    let out = require(a.out, &None, "out", "out")?;
    let d = &mut config.dataset;
    if let Some(s) = a.schema {
        d.schema = s;
    }
    if let Some(b) = a.backend {
        d.backend = b;
    }
    if let Some(e) = a.endpoint {
        d.http.endpoint = e;
    }
    if let Some(m) = a.model {
        d.http.model = m;
    }
    d.concurrency = a.concurrency.unwrap_or(d.concurrency);
    d.knowledge &= !a.no_knowledge;
    config.check()?;
    let schema: Schema = parse_with(&config.dataset.schema, "schema")?;
    let render: RenderMode = parse_with(&config.search.render, "render")?;

    let backend: Arc<dyn GenBackend> = match config.dataset.backend.as_str() {
        "mock" => Arc::new(MockBackend::default()),
        "http" => Arc::new(HttpBackend::new(config.dataset.http.clone())),
        other => return Err(CliError::usage(format!("unknown backend `{other}` (expected mock or http)"))),
    };
    let prompts = match a.templates.or_else(|| config.paths.templates.clone()) {
        Some(dir) => PromptTemplates::from_dir(&dir).map_err(|e| CliError::io(&dir, e))?,
        None => PromptTemplates::default(),
    };
    let tags = match a.expert_tags.or_else(|| config.paths.expert_tags.clone()) {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            ExpertTagMap::from_toml(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => ExpertTagMap::default(),
    };
    let aliases = aliases(a.aliases, config)?;
    let store_dir = a.store.or_else(|| config.paths.store.clone()).filter(|_| config.dataset.knowledge);
    let store = store_dir.as_deref().map(|dir| open_store(dir, &aliases)).transpose()?;

    let merged = load_cases(&diagnoses, &records)?;
    let options = DatasetOptions {
        schema,
        limits: SearchLimits { max_depth: config.search.max_depth, max_paths: config.search.max_paths },
        render,
        concurrency: config.dataset.concurrency,
    };
    let run = build_dataset(&merged.cases, store.as_ref().map(|s| (s, &aliases)), backend.as_ref(), &prompts, &tags, &options);
    write_jsonl(&out, &run.records).map_err(|e| CliError::io(&out, e))?;
    emit(
        &json!({
            "schema": schema.to_string(),
            "backend": backend.name(),
            "written": run.records.len(),
            "orphans": merged.orphans.len(),
            "failures": run.failures.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "out": out,
        }),
        None,
    )?;
    if let Some(first) = run.failures.first() {
        let kind = if run.failures.iter().any(|f| matches!(f, GenError::Backend { .. })) { Kind::Backend } else { Kind::Data };
        return Err(CliError::new(kind, format!("{} case(s) failed, first: {first}", run.failures.len())));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// `.parquet` or `.csv` input.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep only rows valid under this schema.
    #[arg(long)]
    schema: Option<String>,
}

pub fn convert(a: ConvertArgs, _config: &mut PipelineConfig) -> Result<(), CliError> {
    let schema: Option<Schema> = a.schema.as_deref().map(|s| parse_with(s, "schema")).transpose()?;
    let report = convert_to_jsonl(&a.input, &a.out, schema)?;
    emit(&report, None)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL of candidate records.
    #[arg(long)]
    candidates: PathBuf,
    /// JSONL of reference records, paired with candidates line by line.
    #[arg(long)]
    references: PathBuf,
    /// Key holding the text (a string, or a list whose first item is used).
    #[arg(long)]
    field: Option<String>,
    /// Key in the reference records, if different.
    #[arg(long)]
    reference_field: Option<String>,
    #[arg(long)]
    lowercase: bool,
    /// Keep punctuation attached to words.
    #[arg(long)]
    keep_punctuation: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn texts(path: &Path, field: &str) -> Result<Vec<String>, CliError> {
    let lines = read_values(path).map_err(|e| CliError::io(path, e))?;
    lines
        .into_iter()
        .map(|(line, value)| {
            let bad = |detail: &str| CliError::data(format!("{}:{line}: {detail}", path.display()));
            let value = value.map_err(|e| bad(&e))?;
            match value.get(field) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Array(items)) => match items.first() {
                    Some(Value::String(s)) => Ok(s.clone()),
                    _ => Err(bad(&format!("`{field}` has no leading string"))),
                },
                _ => Err(bad(&format!("no string `{field}`"))),
            }
        })
        .collect()
}

pub fn evaluate(a: EvaluateArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let e = &mut config.eval;
    if let Some(f) = a.field {
        e.field = f;
    }
    if a.reference_field.is_some() {
        e.reference_field = a.reference_field;
    }
    e.lowercase |= a.lowercase;
    e.detach_punctuation &= !a.keep_punctuation;
    let candidates = texts(&a.candidates, &e.field)?;
    let references = texts(&a.references, e.reference_field.as_deref().unwrap_or(&e.field))?;
    let tokenizer = TokenizerOptions { lowercase: e.lowercase, detach_punctuation: e.detach_punctuation };
    let report = score_texts(&candidates, &references, tokenizer, &BagOfWords::default()).map_err(CliError::data)?;
    emit(&report, a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// JSON object label → probability from the MoE model.
    #[arg(long)]
    moe: Option<PathBuf>,
    /// JSON object label → probability from the ESFT model.
    #[arg(long)]
    esft: Option<PathBuf>,
    /// `weighted` or `vote`.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    w_moe: Option<f64>,
    #[arg(long)]
    w_esft: Option<f64>,
    /// Also report the winner across a sweep of w_moe.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    sweep_step: Option<f64>,
    /// JSON T×N gating matrix to score experts on.
    #[arg(long)]
    gating: Option<PathBuf>,
    /// Selection threshold p for expert scores.
    #[arg(long)]
    threshold: Option<f64>,
    /// `gate` or `token`.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn fuse(a: FuseArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let f = &mut config.fusion;
    if let Some(s) = a.strategy {
        f.strategy = parse_with::<Strategy>(&s, "strategy")?;
    }
    match (a.w_moe, a.w_esft) {
        (Some(m), Some(e)) => (f.w_moe, f.w_esft) = (m, e),
        (Some(m), None) => (f.w_moe, f.w_esft) = (m, 1.0 - m),
        (None, Some(e)) => (f.w_moe, f.w_esft) = (1.0 - e, e),
        (None, None) => {}
    }
    f.sweep_step = a.sweep_step.unwrap_or(f.sweep_step);
    f.threshold = a.threshold.unwrap_or(f.threshold);
    if let Some(m) = a.metric {
        f.metric = m;
    }
    config.check()?;
    let f = &config.fusion;
    let mut result = serde_json::Map::new();
    match (&a.moe, &a.esft) {
        (Some(m), Some(e)) => {
            let p_moe: DiagnosisDistribution = read_json(m)?;
            let p_esft: DiagnosisDistribution = read_json(e)?;
            let cfg = FusionConfig { strategy: f.strategy, w_moe: f.w_moe, w_esft: f.w_esft };
            let fused = fuse_distributions(&p_moe, &p_esft, &cfg).map_err(CliError::usage)?;
            result.insert("config".into(), json!(cfg));
            result.insert("distribution".into(), json!(fused.distribution));
            result.insert("winner".into(), json!(fused.winner));
            if a.sweep {
                let sweep = sweep_weights(&p_moe, &p_esft, f.sweep_step).map_err(CliError::usage)?;
                result.insert("sweep".into(), json!(sweep));
            }
        }
        (None, None) => {}
        _ => return Err(CliError::usage("--moe and --esft go together")),
    }
    if let Some(path) = &a.gating {
        let matrix: GatingMatrix = read_json(path)?;
        if !matrix.is_row_stochastic(1e-6) {
            log::warn!("{}: rows do not sum to 1; scoring the raw values", path.display());
        }
        let metric: ScoreMetric = parse_with(&f.metric, "metric")?;
        let scores = score_experts(&matrix, f.threshold, metric).map_err(CliError::data)?;
        result.insert("expert_scores".into(), json!(scores));
    }
    if result.is_empty() {
        return Err(CliError::usage("nothing to do: give --moe and --esft, or --gating"));
    }
    emit(&Value::Object(result), a.out.as_deref())
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
}

pub fn stats(a: StatsArgs, config: &mut PipelineConfig) -> Result<(), CliError> {
    let store_dir = require(a.store, &config.paths.store, "store", "store")?;
    let aliases = aliases(a.aliases, config)?;
    let store = open_store(&store_dir, &aliases)?;
    emit(&store.stats(), None)
}

#[derive(Debug, Args)]
pub struct GenFixtureArgs {
    /// Directory to create the fixture in.
    #[arg(long)]
    out: PathBuf,
    /// Filler concepts beyond the fixed chains.
    #[arg(long, default_value_t = FixtureConfig::default().concepts)]
    concepts: usize,
    #[arg(long, default_value_t = FixtureConfig::default().seed)]
    seed: u64,
    /// Only current rows, no superseded or retired versions.
    #[arg(long)]
    no_history: bool,
}

pub fn gen_fixture(a: GenFixtureArgs) -> Result<(), CliError> {
    let config = FixtureConfig { concepts: a.concepts, seed: a.seed, history: !a.no_history };
    let summary = write_fixture(&a.out, &config).map_err(|e| CliError::io(&a.out, e))?;
    emit(&summary, None)
}
