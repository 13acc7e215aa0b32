//! Locating the component files of a release directory and parsing them in parallel.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use super::rf2_file::{check_header, parse_chunk, ParseError, ParseReport, Rf2Record};
use crate::rf2::{AxiomRow, ConceptRow, DescriptionRow, RelationshipRow};

/// Component files found in a release directory, each list sorted by path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReleaseFiles {
    pub concepts: Vec<PathBuf>,
    pub descriptions: Vec<PathBuf>,
    pub relationships: Vec<PathBuf>,
    pub axioms: Vec<PathBuf>,
}

/// Classifies `.txt` files by the RF2 naming convention.
///
/// Stated and inferred relationship files are both treated as relationship
/// files. Text definitions are not descriptions for this purpose.
pub fn discover(dir: &Path) -> Result<ReleaseFiles, ParseError> {
    if !dir.is_dir() {
        return Err(ParseError::Missing { path: dir.to_path_buf() });
    }
    let mut files = ReleaseFiles::default();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| ParseError::Io { path: dir.to_path_buf(), source: e.into() })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if !name.ends_with(".txt") {
            continue;
        }
        let path = entry.path().to_path_buf();
        if name.contains("OWLExpression") {
            files.axioms.push(path);
        } else if name.contains("_Concept_") {
            files.concepts.push(path);
        } else if name.contains("_Description_") {
            files.descriptions.push(path);
        } else if name.contains("_Relationship_") || name.contains("_StatedRelationship_") {
            files.relationships.push(path);
        }
    }
    Ok(files)
}

/// Every row of a release in file order, plus per-file reports and file errors.
#[derive(Debug, Default)]
pub struct ParsedRelease {
    pub concepts: Vec<ConceptRow>,
    pub descriptions: Vec<DescriptionRow>,
    pub relationships: Vec<RelationshipRow>,
    pub axioms: Vec<AxiomRow>,
    pub reports: Vec<ParseReport>,
    pub file_errors: Vec<ParseError>,
}

impl ParsedRelease {
    pub fn rows_skipped(&self) -> usize {
        self.reports.iter().map(|r| r.rows_skipped).sum()
    }
}

/// Lines per parallel work unit.
const CHUNK_LINES: usize = 4096;

/// Parses one file, splitting its data lines into chunks parsed in parallel.
///
/// Must run inside the pool that should do the work.
pub fn parse_file_chunked<T: Rf2Record + Send>(path: &Path) -> Result<(Vec<T>, ParseReport), ParseError> {
    let text = fs::read_to_string(path).map_err(|e| ParseError::io(path, e))?;
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let Some((header, data)) = lines.split_first() else {
        return Err(ParseError::Header { path: path.to_path_buf(), expected: T::HEADER.join("\t"), found: String::new() });
    };
    check_header::<T>(path, header)?;

    let parts: Vec<(Vec<T>, ParseReport)> = data
        .par_chunks(CHUNK_LINES)
        .enumerate()
        .map(|(i, chunk)| parse_chunk::<T>(path, chunk, 2 + i * CHUNK_LINES))
        .collect();

    let mut rows = Vec::with_capacity(data.len());
    let mut report = ParseReport { file: path.to_path_buf(), ..Default::default() };
    for (chunk_rows, chunk_report) in parts {
        rows.extend(chunk_rows);
        report.absorb(chunk_report);
    }
    Ok((rows, report))
}

fn parse_all<T: Rf2Record + Send>(
    dir: &Path,
    kind: &'static str,
    paths: &[PathBuf],
    required: bool,
) -> (Vec<T>, Vec<ParseReport>, Vec<ParseError>) {
    if paths.is_empty() {
        let errors = if required { vec![ParseError::MissingKind { dir: dir.to_path_buf(), kind }] } else { Vec::new() };
        return (Vec::new(), Vec::new(), errors);
    }
    let results: Vec<_> = paths.par_iter().map(|p| parse_file_chunked::<T>(p)).collect();
    let (mut rows, mut reports, mut errors) = (Vec::new(), Vec::new(), Vec::new());
    for result in results {
        match result {
            Ok((r, report)) => {
                rows.extend(r);
                reports.push(report);
            }
            Err(e) => errors.push(e),
        }
    }
    (rows, reports, errors)
}

/// Parses every component file of `dir` on a pool of `worker_count` threads.
///
/// Rows come back in file order (files sorted by path), so the result is
/// identical for any worker count. A failing file is reported in
/// `file_errors` without stopping the others; the axiom file is optional.
pub fn parallel_parse(dir: &Path, worker_count: usize) -> Result<ParsedRelease, ParseError> {
    let files = discover(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count.max(1))
        .build()
        .expect("thread pool with a positive thread count");

    pool.install(|| {
        let ((concepts, descriptions), (relationships, axioms)) = rayon::join(
            || {
                rayon::join(
                    || parse_all::<ConceptRow>(dir, "concept", &files.concepts, true),
                    || parse_all::<DescriptionRow>(dir, "description", &files.descriptions, true),
                )
            },
            || {
                rayon::join(
                    || parse_all::<RelationshipRow>(dir, "relationship", &files.relationships, true),
                    || parse_all::<AxiomRow>(dir, "axiom", &files.axioms, false),
                )
            },
        );
        let mut out = ParsedRelease::default();
        macro_rules! take {
            ($field:ident, $part:expr) => {{
                let (rows, reports, errors) = $part;
                out.$field = rows;
                out.reports.extend(reports);
                out.file_errors.extend(errors);
            }};
        }
        take!(concepts, concepts);
        take!(descriptions, descriptions);
        take!(relationships, relationships);
        take!(axioms, axioms);
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::rf2_file::{parse_file, write_file};
    use crate::rf2::well_known::*;
    use crate::rf2::{EffectiveTime, SctId};

    fn concept(i: u64) -> ConceptRow {
        ConceptRow {
            id: SctId::new(100_000 + i).unwrap(),
            effective_time: EffectiveTime::new(20200101 + (i % 20) as u32).unwrap(),
            active: !i.is_multiple_of(7),
            module_id: CORE_MODULE,
            definition_status_id: PRIMITIVE,
        }
    }

    fn write_release(dir: &Path, n: u64, with_relationships: bool) {
        let concepts: Vec<ConceptRow> = (1..=n).map(concept).collect();
        write_file(&dir.join("sct2_Concept_Snapshot_INT_20240101.txt"), &concepts).unwrap();
        let descriptions: Vec<DescriptionRow> = (1..=n)
            .map(|i| DescriptionRow {
                id: SctId::new(5_000_000 + i).unwrap(),
                effective_time: EffectiveTime::new(20200101).unwrap(),
                active: true,
                module_id: CORE_MODULE,
                concept_id: SctId::new(100_000 + i).unwrap(),
                language_code: "en".into(),
                type_id: FSN_TYPE,
                term: format!("Concept {i} (finding)"),
                case_significance_id: CASE_INSENSITIVE,
            })
            .collect();
        write_file(&dir.join("sct2_Description_Snapshot-en_INT_20240101.txt"), &descriptions).unwrap();
        if with_relationships {
            let rels: Vec<RelationshipRow> = (2..=n)
                .map(|i| RelationshipRow {
                    id: SctId::new(9_000_000 + i).unwrap(),
                    effective_time: EffectiveTime::new(20200101).unwrap(),
                    active: true,
                    module_id: CORE_MODULE,
                    source_id: SctId::new(100_000 + i).unwrap(),
                    destination_id: SctId::new(100_000 + i / 2).unwrap(),
                    relationship_group: 0,
                    type_id: IS_A,
                    characteristic_type_id: INFERRED_RELATIONSHIP,
                    modifier_id: EXISTENTIAL_MODIFIER,
                })
                .collect();
            write_file(&dir.join("sct2_Relationship_Snapshot_INT_20240101.txt"), &rels).unwrap();
        }
    }

    #[test]
    fn discovery_classifies_by_name() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "sct2_Concept_Snapshot_INT.txt",
            "sct2_Description_Snapshot-en_INT.txt",
            "sct2_TextDefinition_Snapshot-en_INT.txt",
            "sct2_StatedRelationship_Snapshot_INT.txt",
            "sct2_Relationship_Snapshot_INT.txt",
            "sct2_sRefset_OWLExpressionSnapshot_INT.txt",
            "readme.md",
        ] {
            fs::write(dir.path().join(name), "").unwrap();
        }
        let files = discover(dir.path()).unwrap();
        assert_eq!(files.concepts.len(), 1);
        assert_eq!(files.descriptions.len(), 1);
        assert_eq!(files.relationships.len(), 2);
        assert_eq!(files.axioms.len(), 1);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let dir = tempfile::tempdir().unwrap();
        write_release(dir.path(), 20_000, true);
        let one = parallel_parse(dir.path(), 1).unwrap();
        let eight = parallel_parse(dir.path(), 8).unwrap();
        assert_eq!(one.concepts, eight.concepts);
        assert_eq!(one.descriptions, eight.descriptions);
        assert_eq!(one.relationships, eight.relationships);
        assert!(one.file_errors.is_empty());

        let (sequential, _) = parse_file::<ConceptRow>(&dir.path().join("sct2_Concept_Snapshot_INT_20240101.txt")).unwrap();
        assert_eq!(sequential, eight.concepts);
    }

    #[test]
    fn missing_relationship_file_yields_partial_result() {
        let dir = tempfile::tempdir().unwrap();
        write_release(dir.path(), 10, false);
        let parsed = parallel_parse(dir.path(), 2).unwrap();
        assert_eq!(parsed.concepts.len(), 10);
        assert_eq!(parsed.descriptions.len(), 10);
        assert_eq!(parsed.file_errors.len(), 1);
        assert!(matches!(parsed.file_errors[0], ParseError::MissingKind { kind: "relationship", .. }));
    }

    #[test]
    fn chunk_line_numbers_are_physical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sct2_Concept_Snapshot.txt");
        let mut text = ConceptRow::HEADER.join("\t");
        text.push('\n');
        for i in 1..=(CHUNK_LINES as u64 + 10) {
            if i == CHUNK_LINES as u64 + 5 {
                text.push_str("garbage\n");
            } else {
                text.push_str(&format!("{}\t20200101\t1\t900000000000207008\t900000000000074008\n", 100_000 + i));
            }
        }
        fs::write(&path, &text).unwrap();
        let (_, chunked) = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| parse_file_chunked::<ConceptRow>(&path)).unwrap();
        let (_, sequential) = parse_file::<ConceptRow>(&path).unwrap();
        assert_eq!(chunked, sequential);
        assert_eq!(chunked.errors[0].line, CHUNK_LINES + 6);
    }
}
