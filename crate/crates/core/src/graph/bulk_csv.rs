//! Bulk CSV interchange with external property-graph databases.
//!
//! `nodes.csv`: `conceptId:ID,name,category:LABEL,synonyms,placeholder:boolean`
//! `edges.csv`: `:START_ID,:END_ID,:TYPE,relationshipId,typeId,relationshipGroup`
//!
//! Rows are sorted by id, lines end in LF, and a field is wrapped in double
//! quotes (with inner quotes doubled) when it contains a comma, quote or line
//! break. Synonyms are joined with `|`; a literal `|` or `\` inside a synonym
//! is escaped with `\`. `:TYPE` is the edge type name with spaces replaced by `_`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::model::{AliasTable, EdgeRecord, NodeRecord};
use super::store::{Batch, GraphStore, StoreError, StoreOptions};
use crate::rf2::SctId;

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const NODES_HEADER: &str = "conceptId:ID,name,category:LABEL,synonyms,placeholder:boolean";
pub const EDGES_HEADER: &str = ":START_ID,:END_ID,:TYPE,relationshipId,typeId,relationshipGroup";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {detail}", path.display())]
    Format { path: PathBuf, line: u64, detail: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Quotes a field if it contains a comma, quote or line break.
pub fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

pub fn join_synonyms(synonyms: &BTreeSet<String>) -> String {
    let escaped: Vec<String> = synonyms.iter().map(|s| s.replace('\\', "\\\\").replace('|', "\\|")).collect();
    escaped.join("|")
}

pub fn split_synonyms(field: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if field.is_empty() {
        return out;
    }
    let mut current = String::new();
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => current.extend(chars.next()),
            '|' => if out.insert(std::mem::take(&mut current)) {  } else {  },
            _ => current.push(c),
        }
    }
    out.insert(current);
    out
}

pub fn type_label(type_name: &str) -> String {
    type_name.replace(' ', "_")
}

fn node_line(node: &NodeRecord) -> String {
    format!(
        "{},{},{},{},{}\n",
        node.concept_id,
        csv_field(&node.name),
        csv_field(&node.category),
        csv_field(&join_synonyms(&node.synonyms)),
        node.placeholder
    )
}

fn edge_line(edge: &EdgeRecord) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        edge.source_id,
        edge.destination_id,
        csv_field(&type_label(&edge.type_name)),
        edge.relationship_id,
        edge.type_id,
        edge.relationship_group
    )
}

fn write_lines(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> Result<(), CsvError> {
    let io_err = |source| CsvError::Io { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    out.write_all(header.as_bytes()).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)?;
    for line in lines {
        out.write_all(line.as_bytes()).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Writes `nodes.csv` and `edges.csv` into `out_dir` and returns their paths.
pub fn export_bulk_csv(store: &GraphStore, out_dir: &Path) -> Result<(PathBuf, PathBuf), CsvError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CsvError::Io { path: out_dir.to_path_buf(), source })?;
    let snapshot = store.snapshot();
    let nodes_path = out_dir.join(NODES_FILE);
    let edges_path = out_dir.join(EDGES_FILE);
    write_lines(&nodes_path, NODES_HEADER, snapshot.nodes.values().map(node_line))?;
    write_lines(&edges_path, EDGES_HEADER, snapshot.edges.values().map(edge_line))?;
    Ok((nodes_path, edges_path))
}

fn reader(path: &Path, header: &str) -> Result<csv::Reader<File>, CsvError> {
    let file = File::open(path).map_err(|source| CsvError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let found = reader.headers().map_err(|e| CsvError::Format { path: path.to_path_buf(), line: 1, detail: e.to_string() })?;
    let found: Vec<&str> = found.iter().collect();
    if found.join(",") != header {
        return Err(CsvError::Format { path: path.to_path_buf(), line: 1, detail: format!("expected header `{header}`") });
    }
    Ok(reader)
}

/// Rebuilds a store from a bulk export.
///
/// Edge type names are recovered from `:TYPE` by matching the type concept's
/// node name or alias; failing that, underscores become spaces again.
pub fn import_bulk_csv(dir: &Path, aliases: &AliasTable, options: StoreOptions) -> Result<GraphStore, CsvError> {
    let nodes_path = dir.join(NODES_FILE);
    let edges_path = dir.join(EDGES_FILE);
    let mut nodes = Vec::new();
    for (i, record) in reader(&nodes_path, NODES_HEADER)?.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |detail: String| CsvError::Format { path: nodes_path.clone(), line, detail };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", record.len())));
        }
        let concept_id: SctId = record[0].parse().map_err(|e| bad(format!("conceptId: {e}")))?;
        let placeholder = match &record[4] {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("placeholder: expected true or false, found `{other}`"))),
        };
        nodes.push(NodeRecord {
            concept_id,
            name: record[1].to_string(),
            category: record[2].to_string(),
            synonyms: split_synonyms(&record[3]),
            placeholder,
        });
    }
    let names: std::collections::HashMap<SctId, String> = nodes.iter().map(|n| (n.concept_id, n.name.clone())).collect();

    let mut edges = Vec::new();
    for (i, record) in reader(&edges_path, EDGES_HEADER)?.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |detail: String| CsvError::Format { path: edges_path.clone(), line, detail };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", record.len())));
        }
        let id = |k: usize, name: &str| record[k].parse::<SctId>().map_err(|e| bad(format!("{name}: {e}")));
        let type_id = id(4, "typeId")?;
        let label = &record[2];
        let type_name = [names.get(&type_id).map(String::as_str), aliases.get(type_id)]
            .into_iter()
            .flatten()
            .find(|candidate| type_label(candidate) == label)
            .map_or_else(|| label.replace('_', " "), str::to_string);
        edges.push(EdgeRecord {
            source_id: id(0, ":START_ID")?,
            destination_id: id(1, ":END_ID")?,
            type_name,
            relationship_id: id(3, "relationshipId")?,
            type_id,
            relationship_group: record[5].parse().map_err(|e| bad(format!("relationshipGroup: {e}")))?,
        });
    }

    let store = GraphStore::new(options);
    let batch_id = store.allocate_batch_ids(1).start;
    store.submit_batch(&Batch { batch_id, nodes, edges })?;
    Ok(store)
}
