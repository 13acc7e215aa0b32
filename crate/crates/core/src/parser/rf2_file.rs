//! Tab-separated RF2 file reading and writing.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver};
use std::thread::JoinHandle;

use serde::Serialize;
use thiserror::Error;

use crate::rf2::{AxiomRow, ConceptRow, DescriptionRow, EffectiveTime, RelationshipRow, SctId};

/// Errors that make a whole file unusable.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{}: file not found", path.display())]
    Missing { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: header mismatch: expected `{expected}`, found `{found}`", path.display())]
    Header { path: PathBuf, expected: String, found: String },
    #[error("{}: no {kind} file in release", dir.display())]
    MissingKind { dir: PathBuf, kind: &'static str },
}

impl ParseError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            ParseError::Missing { path: path.to_path_buf() }
        } else {
            ParseError::Io { path: path.to_path_buf(), source }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// Physical line number; the header is line 1.
    pub line: usize,
    pub reason: String,
}

/// Per-file outcome of a parse. `rows_ok + rows_skipped` is the data-line count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub file: PathBuf,
    pub rows_ok: usize,
    pub rows_skipped: usize,
    pub errors: Vec<LineError>,
}

impl ParseReport {
    fn new(file: &Path) -> Self {
        ParseReport { file: file.to_path_buf(), ..Default::default() }
    }

    fn skip(&mut self, line: usize, reason: String) {
        self.rows_skipped += 1;
        self.errors.push(LineError { line, reason });
    }

    /// Folds `other` into `self`, renumbering nothing: both must describe the same file.
    pub(crate) fn absorb(&mut self, other: ParseReport) {
        self.rows_ok += other.rows_ok;
        self.rows_skipped += other.rows_skipped;
        self.errors.extend(other.errors);
    }
}

/// A row type with a fixed RF2 column layout.
pub trait Rf2Record: Sized {
    const HEADER: &'static [&'static str];
    /// Human-readable kind used in reports ("concept", "description", ...).
    const KIND: &'static str;

    fn from_fields(fields: &[&str]) -> Result<Self, String>;
    fn write_fields(&self, out: &mut String);

    /// The row rendered as one RF2 line, without terminator.
    fn to_line(&self) -> String {
        let mut out = String::new();
        self.write_fields(&mut out);
        out
    }
}

fn id(fields: &[&str], i: usize, name: &str) -> Result<SctId, String> {
    SctId::from_str(fields[i]).map_err(|e| format!("{name}: {e}"))
}

fn time(fields: &[&str], i: usize) -> Result<EffectiveTime, String> {
    EffectiveTime::from_str(fields[i]).map_err(|e| format!("effectiveTime: {e}"))
}

fn active(fields: &[&str], i: usize) -> Result<bool, String> {
    match fields[i] {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(format!("active: expected 0 or 1, found `{other}`")),
    }
}

fn group(fields: &[&str], i: usize) -> Result<u32, String> {
    let s = fields[i];
    let canonical = !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if !canonical {
        return Err(format!("relationshipGroup: expected a non-negative integer, found `{s}`"));
    }
    s.parse().map_err(|_| format!("relationshipGroup: `{s}` out of range"))
}

fn push_fields(out: &mut String, fields: &[&dyn std::fmt::Display]) {
    use std::fmt::Write as _;
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        write!(out, "{f}").expect("writing to a String");
    }
}

fn flag(active: bool) -> &'static str {
    if active {
        "1"
    } else {
        "0"
    }
}

impl Rf2Record for ConceptRow {
    const HEADER: &'static [&'static str] = &["id", "effectiveTime", "active", "moduleId", "definitionStatusId"];
    const KIND: &'static str = "concept";

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(ConceptRow {
            id: id(f, 0, "id")?,
            effective_time: time(f, 1)?,
            active: active(f, 2)?,
            module_id: id(f, 3, "moduleId")?,
            definition_status_id: id(f, 4, "definitionStatusId")?,
        })
    }

    fn write_fields(&self, out: &mut String) {
        push_fields(out, &[&self.id, &self.effective_time, &flag(self.active), &self.module_id, &self.definition_status_id]);
    }
}

impl Rf2Record for DescriptionRow {
    const HEADER: &'static [&'static str] =
        &["id", "effectiveTime", "active", "moduleId", "conceptId", "languageCode", "typeId", "term", "caseSignificanceId"];
    const KIND: &'static str = "description";

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        let language_code = f[5];
        if language_code.len() != 2 || !language_code.bytes().all(|b| b.is_ascii_alphabetic()) {
            return Err(format!("languageCode: expected two letters, found `{language_code}`"));
        }
        if f[7].trim().is_empty() {
            return Err("term: empty".to_string());
        }
        Ok(DescriptionRow {
            id: id(f, 0, "id")?,
            effective_time: time(f, 1)?,
            active: active(f, 2)?,
            module_id: id(f, 3, "moduleId")?,
            concept_id: id(f, 4, "conceptId")?,
            language_code: language_code.to_string(),
            type_id: id(f, 6, "typeId")?,
            term: f[7].to_string(),
            case_significance_id: id(f, 8, "caseSignificanceId")?,
        })
    }

    fn write_fields(&self, out: &mut String) {
        push_fields(
            out,
            &[
                &self.id,
                &self.effective_time,
                &flag(self.active),
                &self.module_id,
                &self.concept_id,
                &self.language_code,
                &self.type_id,
                &self.term,
                &self.case_significance_id,
            ],
        );
    }
}

impl Rf2Record for RelationshipRow {
    const HEADER: &'static [&'static str] = &[
        "id",
        "effectiveTime",
        "active",
        "moduleId",
        "sourceId",
        "destinationId",
        "relationshipGroup",
        "typeId",
        "characteristicTypeId",
        "modifierId",
    ];
    const KIND: &'static str = "relationship";

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(RelationshipRow {
            id: id(f, 0, "id")?,
            effective_time: time(f, 1)?,
            active: active(f, 2)?,
            module_id: id(f, 3, "moduleId")?,
            source_id: id(f, 4, "sourceId")?,
            destination_id: id(f, 5, "destinationId")?,
            relationship_group: group(f, 6)?,
            type_id: id(f, 7, "typeId")?,
            characteristic_type_id: id(f, 8, "characteristicTypeId")?,
            modifier_id: id(f, 9, "modifierId")?,
        })
    }

    fn write_fields(&self, out: &mut String) {
        push_fields(
            out,
            &[
                &self.id,
                &self.effective_time,
                &flag(self.active),
                &self.module_id,
                &self.source_id,
                &self.destination_id,
                &self.relationship_group,
                &self.type_id,
                &self.characteristic_type_id,
                &self.modifier_id,
            ],
        );
    }
}

impl Rf2Record for AxiomRow {
    const HEADER: &'static [&'static str] =
        &["id", "effectiveTime", "active", "moduleId", "refsetId", "referencedComponentId", "owlExpression"];
    const KIND: &'static str = "axiom";

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        let row = AxiomRow {
            id: id(f, 0, "id")?,
            effective_time: time(f, 1)?,
            active: active(f, 2)?,
            module_id: id(f, 3, "moduleId")?,
            refset_id: id(f, 4, "refsetId")?,
            referenced_component_id: id(f, 5, "referencedComponentId")?,
            owl_expression: f[6].to_string(),
        };
        if row.active && row.owl_expression.trim().is_empty() {
            return Err("owlExpression: empty on an active row".to_string());
        }
        Ok(row)
    }

    fn write_fields(&self, out: &mut String) {
        push_fields(
            out,
            &[
                &self.id,
                &self.effective_time,
                &flag(self.active),
                &self.module_id,
                &self.refset_id,
                &self.referenced_component_id,
                &self.owl_expression,
            ],
        );
    }
}

/// Parses one data line (terminator already removed).
pub fn parse_line<T: Rf2Record>(line: &str) -> Result<T, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != T::HEADER.len() {
        return Err(format!("expected {} fields, found {}", T::HEADER.len(), fields.len()));
    }
    T::from_fields(&fields)
}

fn strip_terminator(line: &mut String) {
    if line.ends_with('\n') {
        line.pop();
        if line.ends_with('\r') {
            line.pop();
        }
    }
}

pub(crate) fn check_header<T: Rf2Record>(path: &Path, header: &str) -> Result<(), ParseError> {
    let header = header.strip_prefix('\u{feff}').unwrap_or(header);
    let header = header.strip_suffix('\r').unwrap_or(header);
    let found: Vec<&str> = header.split('\t').collect();
    if found != T::HEADER {
        return Err(ParseError::Header { path: path.to_path_buf(), expected: T::HEADER.join("\t"), found: header.to_string() });
    }
    Ok(())
}

/// Streams rows of one kind from an RF2 file in file order.
///
/// Malformed lines are skipped and recorded in the report; the iterator only
/// yields rows that parsed.
pub struct Rf2Reader<T, R = BufReader<File>> {
    input: R,
    line_no: usize,
    buf: String,
    report: ParseReport,
    failure: Option<ParseError>,
    _rows: PhantomData<fn() -> T>,
}

impl<T: Rf2Record> Rf2Reader<T> {
    pub fn open(path: &Path) -> Result<Self, ParseError> {
        let file = File::open(path).map_err(|e| ParseError::io(path, e))?;
        Self::new(BufReader::new(file), path)
    }
}

impl<T: Rf2Record, R: BufRead> Rf2Reader<T, R> {
    /// Reads and validates the header. `path` only labels the report.
    pub fn new(mut input: R, path: &Path) -> Result<Self, ParseError> {
        let mut header = String::new();
        input.read_line(&mut header).map_err(|e| ParseError::io(path, e))?;
        strip_terminator(&mut header);
        check_header::<T>(path, &header)?;
        Ok(Rf2Reader { input, line_no: 1, buf: String::new(), report: ParseReport::new(path), failure: None, _rows: PhantomData })
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    /// Consumes the reader, returning the report or the I/O error that stopped it.
    pub fn finish(self) -> Result<ParseReport, ParseError> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.report),
        }
    }
}

impl<T: Rf2Record, R: BufRead> Iterator for Rf2Reader<T, R> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        if self.failure.is_some() {
            return None;
        }
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failure = Some(ParseError::io(&self.report.file, e));
                    return None;
                }
            }
            self.line_no += 1;
            strip_terminator(&mut self.buf);
            match parse_line::<T>(&self.buf) {
                Ok(row) => {
                    self.report.rows_ok += 1;
                    return Some(row);
                }
                Err(reason) => self.report.skip(self.line_no, reason),
            }
        }
    }
}

/// Parses a data chunk whose first line has physical number `first_line`.
pub(crate) fn parse_chunk<T: Rf2Record>(path: &Path, lines: &[&str], first_line: usize) -> (Vec<T>, ParseReport) {
    let mut report = ParseReport::new(path);
    let mut rows = Vec::with_capacity(lines.len());
    for (offset, line) in lines.iter().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        match parse_line::<T>(line) {
            Ok(row) => {
                report.rows_ok += 1;
                rows.push(row);
            }
            Err(reason) => report.skip(first_line + offset, reason),
        }
    }
    (rows, report)
}

/// Reads a whole file sequentially.
pub fn parse_file<T: Rf2Record>(path: &Path) -> Result<(Vec<T>, ParseReport), ParseError> {
    let mut reader = Rf2Reader::<T>::open(path)?;
    let rows: Vec<T> = reader.by_ref().collect();
    Ok((rows, reader.finish()?))
}

pub fn parse_concept_file(path: &Path) -> Result<(Vec<ConceptRow>, ParseReport), ParseError> {
    parse_file(path)
}

pub fn parse_description_file(path: &Path) -> Result<(Vec<DescriptionRow>, ParseReport), ParseError> {
    parse_file(path)
}

pub fn parse_relationship_file(path: &Path) -> Result<(Vec<RelationshipRow>, ParseReport), ParseError> {
    parse_file(path)
}

pub fn parse_axiom_file(path: &Path) -> Result<(Vec<AxiomRow>, ParseReport), ParseError> {
    parse_file(path)
}

/// Rows delivered through a bounded channel by a background reader thread.
///
/// The reader blocks once `capacity` rows are queued, so a slow consumer
/// never causes the whole file to be buffered.
pub struct RowStream<T> {
    rows: Receiver<T>,
    worker: JoinHandle<Result<ParseReport, ParseError>>,
}

impl<T: Rf2Record + Send + 'static> RowStream<T> {
    pub fn open(path: &Path, capacity: usize) -> Result<Self, ParseError> {
        let reader = Rf2Reader::<T>::open(path)?;
        let (tx, rows) = mpsc::sync_channel(capacity.max(1));
        let worker = std::thread::spawn(move || {
            let mut reader = reader;
            for row in reader.by_ref() {
                if tx.send(row).is_err() {
                    break;
                }
            }
            reader.finish()
        });
        Ok(RowStream { rows, worker })
    }

    /// Waits for the reader thread and returns its report.
    ///
    /// Rows not yet received are discarded.
    pub fn finish(self) -> Result<ParseReport, ParseError> {
        drop(self.rows);
        self.worker.join().expect("RF2 reader thread panicked")
    }
}

impl<T> Iterator for RowStream<T> {
    type Item = T;
    fn next(&mut self) -> Option<T> {
        self.rows.recv().ok()
    }
}

/// Writes rows as an RF2 file with LF terminators.
pub fn write_file<T: Rf2Record>(path: &Path, rows: &[T]) -> io::Result<()> {
    let mut out = io::BufWriter::new(File::create(path)?);
    out.write_all(T::HEADER.join("\t").as_bytes())?;
    out.write_all(b"\n")?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        row.write_fields(&mut line);
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn read<T: Rf2Record>(text: &str) -> Result<(Vec<T>, ParseReport), ParseError> {
        let mut reader = Rf2Reader::<T, _>::new(text.as_bytes(), Path::new("mem.txt"))?;
        let rows: Vec<T> = reader.by_ref().collect();
        Ok((rows, reader.finish()?))
    }

    const CONCEPT_HEADER: &str = "id\teffectiveTime\tactive\tmoduleId\tdefinitionStatusId\n";

    #[test]
    fn parses_is_a_concept_line() {
        let (rows, report) =
            read::<ConceptRow>(&format!("{CONCEPT_HEADER}116680003\t20020131\t1\t900000000000207008\t900000000000074008\n")).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].id.get(), 116680003);
        assert!(rows[0].active);
        assert_eq!(report.rows_ok, 1);
    }

    #[test]
    fn short_line_is_reported_with_its_line_number() {
        let text = format!(
            "{CONCEPT_HEADER}100001\t20020131\t1\t900000000000207008\t900000000000074008\n\
             100002\t20020131\t1\t900000000000207008\n\
             100003\t20020131\t0\t900000000000207008\t900000000000074008"
        );
        let (rows, report) = read::<ConceptRow>(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((report.rows_ok, report.rows_skipped), (2, 1));
        assert_eq!(report.errors[0].line, 3);
        assert!(report.errors[0].reason.contains("expected 5 fields"));
    }

    #[test]
    fn malformed_fields_are_skipped() {
        let bad = [
            "x\t20020131\t1\t900000000000207008\t900000000000074008",
            "100001\t20021301\t1\t900000000000207008\t900000000000074008",
            "100001\t20020131\ttrue\t900000000000207008\t900000000000074008",
            "0100001\t20020131\t1\t900000000000207008\t900000000000074008",
            "",
        ];
        for line in bad {
            let (rows, report) = read::<ConceptRow>(&format!("{CONCEPT_HEADER}{line}\n")).unwrap();
            assert!(rows.is_empty(), "{line}");
            assert_eq!(report.rows_skipped, 1, "{line}");
        }
    }

    #[test]
    fn crlf_and_bom_are_accepted() {
        let text = "\u{feff}id\teffectiveTime\tactive\tmoduleId\tdefinitionStatusId\r\n100001\t20020131\t1\t900000000000207008\t900000000000074008\r\n";
        let (rows, _) = read::<ConceptRow>(text).unwrap();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn header_mismatch_is_a_file_error() {
        let err = read::<ConceptRow>("id\ttime\tactive\tmoduleId\tdefinitionStatusId\n").unwrap_err();
        assert!(matches!(err, ParseError::Header { .. }));
        let err = read::<DescriptionRow>(CONCEPT_HEADER).unwrap_err();
        assert!(matches!(err, ParseError::Header { .. }));
    }

    #[test]
    fn missing_file_is_reported() {
        let err = parse_concept_file(Path::new("/nonexistent/sct2_Concept_Snapshot.txt")).unwrap_err();
        assert!(matches!(err, ParseError::Missing { .. }));
    }

    #[test]
    fn description_checks() {
        let header = DescriptionRow::HEADER.join("\t");
        let line = |lang: &str, term: &str| {
            format!("{header}\n1001\t20020131\t1\t900000000000207008\t123\t{lang}\t900000000000003001\t{term}\t900000000000448009\n")
        };
        assert_eq!(read::<DescriptionRow>(&line("en", "Diabetes mellitus (disorder)")).unwrap().0.len(), 1);
        assert_eq!(read::<DescriptionRow>(&line("eng", "x")).unwrap().1.rows_skipped, 1);
        assert_eq!(read::<DescriptionRow>(&line("en", "  ")).unwrap().1.rows_skipped, 1);
    }

    #[test]
    fn stream_delivers_rows_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        let rows: Vec<ConceptRow> = (1..=500)
            .map(|i| ConceptRow {
                id: SctId::new(100_000 + i).unwrap(),
                effective_time: EffectiveTime::new(20200101).unwrap(),
                active: true,
                module_id: crate::rf2::well_known::CORE_MODULE,
                definition_status_id: crate::rf2::well_known::PRIMITIVE,
            })
            .collect();
        write_file(&path, &rows).unwrap();
        let mut stream = RowStream::<ConceptRow>::open(&path, 4).unwrap();
        let got: Vec<ConceptRow> = stream.by_ref().collect();
        assert_eq!(got, rows);
        assert_eq!(stream.finish().unwrap().rows_ok, 500);
    }

    fn id_text() -> impl Strategy<Value = String> {
        "[1-9][0-9]{0,17}"
    }
    fn date_text() -> impl Strategy<Value = String> {
        (1000u32..=9999, 1u32..=12, 1u32..=28).prop_map(|(y, m, d)| format!("{y}{m:02}{d:02}"))
    }

    proptest! {
        #[test]
        fn concept_line_round_trips(id in id_text(), t in date_text(), a in "[01]", m in id_text(), d in id_text()) {
            let line = format!("{id}\t{t}\t{a}\t{m}\t{d}");
            let row: ConceptRow = parse_line(&line).unwrap();
            prop_assert_eq!(row.to_line(), line);
        }

        #[test]
        fn description_line_round_trips(id in id_text(), t in date_text(), c in id_text(), lang in "[a-z]{2}", term in "[^\t\r\n]*[^\t\r\n ][^\t\r\n]*") {
            let line = format!("{id}\t{t}\t1\t900000000000207008\t{c}\t{lang}\t900000000000013009\t{term}\t900000000000448009");
            let row: DescriptionRow = parse_line(&line).unwrap();
            prop_assert_eq!(row.to_line(), line);
        }

        #[test]
        fn relationship_line_round_trips(s in id_text(), d in id_text(), g in 0u32..100, ty in id_text(), t in date_text()) {
            let line = format!("200001\t{t}\t1\t900000000000207008\t{s}\t{d}\t{g}\t{ty}\t900000000000011006\t900000000000451002");
            let row: RelationshipRow = parse_line(&line).unwrap();
            prop_assert_eq!(row.to_line(), line);
        }

        #[test]
        fn axiom_line_round_trips(c in id_text(), expr in "[^\t\r\n]*[^\t\r\n ][^\t\r\n]*") {
            let line = format!("300001\t20200101\t1\t900000000000207008\t733073007\t{c}\t{expr}");
            let row: AxiomRow = parse_line(&line).unwrap();
            prop_assert_eq!(row.to_line(), line);
        }
    }
}
