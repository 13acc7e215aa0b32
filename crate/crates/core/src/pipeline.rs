//! The stages wired together: release → snapshot → composites → graph →
//! knowledge paths → dataset records.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::dataset::{
    gen_all, merge_cases, read_diagnoses, read_records, to_esft_train, to_esft_val, CaseError, ExpertTagMap, GenBackend,
    GenError, MergeOutcome, MergedCase, PromptTemplates, Schema,
};
use crate::graph::{
    import_bulk_csv, AliasTable, CsvError, EdgeRecord, GraphLoader, GraphStore, LoadOutcome, LoaderOptions, NodeRecord,
    StoreOptions, TypeNames,
};
use crate::parser::{axiom_triples, parallel_parse, AxiomFailure, ParseError, ParseReport};
use crate::paths::{knowledge_vector, RenderMode, SearchLimits};
use crate::rf2::well_known::{FSN_TYPE, ROLE_GROUP};
use crate::rf2::{
    build_composites, drop_incomplete, reintegrate_axioms, reject_self_loops, resolve_snapshot, CompositeConcept,
    DropReport, RelationshipRow, SctId, SelfLoop,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{} release file(s) failed: {}", .0.len(), .0.join("; "))]
    Files(Vec<String>),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Case(#[from] CaseError),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub files: Vec<ParseReport>,
    pub rows_skipped: usize,
    pub active_concepts: usize,
    pub active_descriptions: usize,
    pub active_relationships: usize,
    pub axiom_triples: usize,
    pub axiom_failures: Vec<AxiomFailure>,
    pub self_loops: Vec<SelfLoop>,
    pub composites: usize,
    pub dropped: DropReport,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub composites: Vec<CompositeConcept>,
    /// Active relationships, axiom-derived ones included, sorted by id.
    pub relationships: Vec<RelationshipRow>,
    pub report: IngestReport,
}

/// Parses a release directory and reduces it to composites.
///
/// Unreadable files fail the whole ingest; malformed lines are skipped and
/// counted in the report.
pub fn ingest(release: &Path, workers: usize) -> Result<Ingested, PipelineError> {
    let parsed = parallel_parse(release, workers)?;
    if !parsed.file_errors.is_empty() {
        return Err(PipelineError::Files(parsed.file_errors.iter().map(ToString::to_string).collect()));
    }
    let rows_skipped = parsed.rows_skipped();
    let concepts = resolve_snapshot(parsed.concepts);
    let descriptions = resolve_snapshot(parsed.descriptions);
    let relationships = resolve_snapshot(parsed.relationships);
    let axioms = resolve_snapshot(parsed.axioms);
    let (triples, axiom_failures) = axiom_triples(&axioms, ROLE_GROUP);
    let active_relationships = relationships.len();
    let mut relationships = reintegrate_axioms(&triples, relationships);
    relationships.sort_by_key(|r| r.id);
    let (relationships, self_loops) = reject_self_loops(relationships);
    let set = build_composites(&concepts, &descriptions, &relationships, FSN_TYPE);
    let (composites, dropped) = drop_incomplete(set, None);
    for f in &axiom_failures {
        log::warn!("axiom {}: {}", f.axiom_id, f.error);
    }
    let report = IngestReport {
        files: parsed.reports,
        rows_skipped,
        active_concepts: concepts.len(),
        active_descriptions: descriptions.len(),
        active_relationships,
        axiom_triples: triples.len(),
        axiom_failures,
        self_loops,
        composites: composites.len(),
        dropped,
    };
    Ok(Ingested { composites, relationships, report })
}

/// Loads composites and their outgoing relationships through a buffered
/// loader: each node is pushed, then its edges. Relationships whose source
/// did not survive ingest are left out; unknown destinations become
/// placeholders.
pub fn load_graph(
    ingested: &Ingested,
    aliases: &AliasTable,
    store_options: StoreOptions,
    loader_options: LoaderOptions,
) -> (GraphStore, LoadOutcome) {
    let store = GraphStore::new(store_options);
    let names = TypeNames::new(&ingested.composites, aliases.clone());
    let mut by_source: HashMap<SctId, Vec<&RelationshipRow>> = HashMap::new();
    for r in &ingested.relationships {
        by_source.entry(r.source_id).or_default().push(r);
    }
    let outcome = {
        let mut loader = GraphLoader::new(&store, loader_options);
        for c in &ingested.composites {
            loader.push_node(NodeRecord::from_composite(c));
            for r in by_source.get(&c.concept_id).into_iter().flatten() {
                loader.push_edge(EdgeRecord::from_relationship(r, &names));
            }
        }
        loader.finish()
    };
    (store, outcome)
}

/// Reopens a store from a bulk CSV directory.
pub fn open_store(dir: &Path, aliases: &AliasTable) -> Result<GraphStore, PipelineError> {
    Ok(import_bulk_csv(dir, aliases, StoreOptions::default())?)
}

pub fn load_cases(diagnoses: &Path, records: &Path) -> Result<MergeOutcome, PipelineError> {
    Ok(merge_cases(&read_diagnoses(diagnoses)?, &read_records(records)?))
}

/// The narrative fields of a case, one per line, for seed matching.
pub fn case_text(case: &MergedCase) -> String {
    case.narrative_fields.iter().map(|f| f.text.as_str()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetOptions {
    pub schema: Schema,
    pub limits: SearchLimits,
    pub render: RenderMode,
    pub concurrency: usize,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            schema: Schema::Platypus,
            limits: SearchLimits::default(),
            render: RenderMode::default(),
            concurrency: 4,
        }
    }
}

#[derive(Debug, Default)]
pub struct DatasetRun {
    /// Records in the requested schema, in case order.
    pub records: Vec<Value>,
    pub failures: Vec<GenError>,
}

/// Generates one record per case. With a graph, each case's narrative is
/// matched against it and the rendered paths are injected into the input.
///
/// ESFT records are derived from the Platypus record: training ids and
/// validation indices are the visit ids, and the validation answer is the
/// record output.
pub fn build_dataset(
    cases: &[MergedCase],
    graph: Option<(&GraphStore, &AliasTable)>,
    backend: &dyn GenBackend,
    prompts: &PromptTemplates,
    expert_tags: &ExpertTagMap,
    options: &DatasetOptions,
) -> DatasetRun {
    let knowledge = |case: &MergedCase| match graph {
        Some((store, aliases)) => {
            knowledge_vector(store, aliases, &case_text(case), None, options.limits).rendered(options.render)
        }
        None => Vec::new(),
    };
    let run = gen_all(cases, backend, prompts, &knowledge, options.concurrency);
    let clinic: HashMap<u64, &str> = cases.iter().map(|c| (c.visit_id, c.clinic_type.as_str())).collect();
    let records = run
        .records
        .iter()
        .map(|(visit, r)| {
            let value = match options.schema {
                Schema::Platypus => serde_json::to_value(r),
                Schema::EsftTrain => serde_json::to_value(to_esft_train(r, *visit, expert_tags.tags(clinic[visit]))),
                Schema::EsftVal => serde_json::to_value(to_esft_val(r, *visit, &r.output, &r.output)),
            };
            value.expect("records serialize")
        })
        .collect();
    DatasetRun { records, failures: run.failures }
}
