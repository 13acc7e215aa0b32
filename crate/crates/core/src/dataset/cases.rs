//! Raw outpatient case tables and their merge into one record per visit.
//!
//! Two delimiter-separated tables are read: outpatient diagnoses (one row per
//! diagnosis) and medical records (one row per narrative field). Files ending
//! in `.tsv` are tab-separated; anything else is comma-separated.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DIAGNOSIS_COLUMNS: [&str; 9] =
    ["ID", "Gender", "Age", "Age Unit", "Visit Time", "Department", "Clinic Type", "Diagnosis Code", "Diagnosis"];
pub const RECORD_COLUMNS: [&str; 12] = [
    "ID",
    "Gender",
    "Age",
    "Age Unit",
    "Visit Time",
    "Department",
    "Clinic Type",
    "Record Type",
    "Diagnosis Code & Name",
    "Condition Type",
    "Element Value",
    "Date",
];

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {detail}", path.display())]
    Format { path: PathBuf, line: u64, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisRow {
    pub visit_id: u64,
    pub gender: String,
    pub age: String,
    pub age_unit: String,
    pub visit_time: String,
    pub department: String,
    pub clinic_type: String,
    pub code: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub visit_id: u64,
    pub gender: String,
    pub age: String,
    pub age_unit: String,
    pub visit_time: String,
    pub department: String,
    pub clinic_type: String,
    pub record_type: String,
    pub diagnosis: String,
    pub condition_type: String,
    pub value: String,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnosis {
    pub code: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeField {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedCase {
    pub visit_id: u64,
    pub gender: String,
    pub age: String,
    pub age_unit: String,
    pub visit_time: String,
    pub department: String,
    pub clinic_type: String,
    pub record_type: String,
    pub diagnoses: Vec<Diagnosis>,
    /// In the order the condition types first appear.
    pub narrative_fields: Vec<NarrativeField>,
    /// How fields were derived, e.g. a converted serial date.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<String>,
}

impl MergedCase {
    pub fn field(&self, name: &str) -> Option<&str> {
        self.narrative_fields.iter().find(|f| f.name.eq_ignore_ascii_case(name)).map(|f| f.text.as_str())
    }

    /// "F41.101: Anxiety Disorder; ..."
    pub fn diagnosis_line(&self) -> String {
        self.diagnoses.iter().map(|d| format!("{}: {}", d.code, d.name)).collect::<Vec<_>>().join("; ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingFrom {
    Diagnoses,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Orphan {
    pub visit_id: u64,
    pub missing_from: MissingFrom,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MergeOutcome {
    pub cases: Vec<MergedCase>,
    pub orphans: Vec<Orphan>,
}

/// Converts a spreadsheet serial date (days since 1899-12-30, fraction =
/// time of day) to `yyyy/m/d h:mm:ss`, rounded to the second.
pub fn serial_to_datetime(serial: f64) -> Option<String> {
    if !serial.is_finite() || !(0.0..2_958_466.0).contains(&serial) {
        return None;
    }
    let epoch = NaiveDate::from_ymd_opt(1899, 12, 30)?.and_hms_opt(0, 0, 0)?;
    let seconds = (serial * 86_400.0).round() as i64;
    let t = epoch.checked_add_signed(Duration::seconds(seconds))?;
    Some(format_visit_time(&t))
}

fn format_visit_time(t: &NaiveDateTime) -> String {
    use chrono::Datelike;
    format!("{}/{}/{} {}:{:02}:{:02}", t.year(), t.month(), t.day(), t.hour(), t.minute(), t.second())
}

/// Whether `text` reads as `yyyy/m/d` optionally followed by ` h:mm[:ss]`.
pub fn is_textual_time(text: &str) -> bool {
    let text = text.trim();
    let (date, time) = match text.split_once(' ') {
        Some((d, t)) => (d, Some(t)),
        None => (text, None),
    };
    let date_ok = NaiveDate::parse_from_str(date, "%Y/%m/%d").is_ok();
    let time_ok = time.is_none_or(|t| {
        chrono::NaiveTime::parse_from_str(t, "%H:%M:%S").is_ok() || chrono::NaiveTime::parse_from_str(t, "%H:%M").is_ok()
    });
    date_ok && time_ok
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CaseError> {
    let delimiter = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) { b'\t' } else { b',' };
    let file = std::fs::File::open(path).map_err(|source| CaseError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().delimiter(delimiter).flexible(false).from_reader(file))
}

fn read_table(path: &Path, columns: &[&str]) -> Result<Vec<Vec<String>>, CaseError> {
    let mut rdr = reader(path)?;
    let bad = |line: u64, detail: String| CaseError::Format { path: path.to_path_buf(), line, detail };
    let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let index: Vec<usize> = columns
        .iter()
        .map(|c| headers.iter().position(|h| h.trim() == *c).ok_or_else(|| bad(1, format!("missing column `{c}`"))))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| bad(i as u64 + 2, e.to_string()))?;
        rows.push(index.iter().map(|&k| record.get(k).unwrap_or("").trim().to_string()).collect());
    }
    Ok(rows)
}

fn visit_id(path: &Path, line: u64, text: &str) -> Result<u64, CaseError> {
    text.parse::<u64>().ok().filter(|v| *v > 0).ok_or_else(|| CaseError::Format {
        path: path.to_path_buf(),
        line,
        detail: format!("ID `{text}` is not a positive integer"),
    })
}

pub fn read_diagnoses(path: &Path) -> Result<Vec<DiagnosisRow>, CaseError> {
    read_table(path, &DIAGNOSIS_COLUMNS)?
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            let id = visit_id(path, i as u64 + 2, &r[0])?;
            let mut take = |k: usize| std::mem::take(&mut r[k]);
            Ok(DiagnosisRow {
                visit_id: id,
                gender: take(1),
                age: take(2),
                age_unit: take(3),
                visit_time: take(4),
                department: take(5),
                clinic_type: take(6),
                code: take(7),
                name: take(8),
            })
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>, CaseError> {
    read_table(path, &RECORD_COLUMNS)?
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            let id = visit_id(path, i as u64 + 2, &r[0])?;
            let mut take = |k: usize| std::mem::take(&mut r[k]);
            Ok(RecordRow {
                visit_id: id,
                gender: take(1),
                age: take(2),
                age_unit: take(3),
                visit_time: take(4),
                department: take(5),
                clinic_type: take(6),
                record_type: take(7),
                diagnosis: take(8),
                condition_type: take(9),
                value: take(10),
                date: take(11),
            })
        })
        .collect()
}

/// Writes rows in the column layout `read_diagnoses` expects.
pub fn write_diagnoses(path: &Path, rows: &[DiagnosisRow]) -> Result<(), CaseError> {
    write_table(path, &DIAGNOSIS_COLUMNS, rows.iter().map(|r| {
        vec![
            r.visit_id.to_string(),
            r.gender.clone(),
            r.age.clone(),
            r.age_unit.clone(),
            r.visit_time.clone(),
            r.department.clone(),
            r.clinic_type.clone(),
            r.code.clone(),
            r.name.clone(),
        ]
    }))
}

pub fn write_records(path: &Path, rows: &[RecordRow]) -> Result<(), CaseError> {
    write_table(path, &RECORD_COLUMNS, rows.iter().map(|r| {
        vec![
            r.visit_id.to_string(),
            r.gender.clone(),
            r.age.clone(),
            r.age_unit.clone(),
            r.visit_time.clone(),
            r.department.clone(),
            r.clinic_type.clone(),
            r.record_type.clone(),
            r.diagnosis.clone(),
            r.condition_type.clone(),
            r.value.clone(),
            r.date.clone(),
        ]
    }))
}

fn write_table(path: &Path, columns: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CaseError> {
    let io = |e: std::io::Error| CaseError::Io { path: path.to_path_buf(), source: e };
    let delimiter = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv")) { b'\t' } else { b',' };
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(columns).map_err(|e| io(e.into()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// Splits "F41.101: Anxiety Disorder" into code and name.
fn split_code_name(text: &str) -> Option<Diagnosis> {
    let (code, name) = text.split_once(':')?;
    let (code, name) = (code.trim(), name.trim());
    (!code.is_empty() && !name.is_empty()).then(|| Diagnosis { code: code.into(), name: name.into() })
}

/// One case per visit id found in both tables, ordered by id.
///
/// Diagnoses come from the diagnosis table, then from the records'
/// "Diagnosis Code & Name" column, deduplicated by code (first name wins).
/// Narrative fields are keyed by condition type; repeated rows for one type
/// are joined with a space. The visit time is the records' textual time when
/// it reads as a date, else the diagnosis table's serial date converted.
pub fn merge_cases(diagnoses: &[DiagnosisRow], records: &[RecordRow]) -> MergeOutcome {
    let mut by_diag: BTreeMap<u64, Vec<&DiagnosisRow>> = BTreeMap::new();
    for row in diagnoses {
        by_diag.entry(row.visit_id).or_default().push(row);
    }
    let mut by_record: BTreeMap<u64, Vec<&RecordRow>> = BTreeMap::new();
    for row in records {
        by_record.entry(row.visit_id).or_default().push(row);
    }
    let ids: BTreeSet<u64> = by_diag.keys().chain(by_record.keys()).copied().collect();
    let mut out = MergeOutcome::default();
    for id in ids {
        let (Some(diag), Some(recs)) = (by_diag.get(&id), by_record.get(&id)) else {
            let missing_from = if by_diag.contains_key(&id) { MissingFrom::Records } else { MissingFrom::Diagnoses };
            log::warn!("visit {id} has no rows in the {missing_from:?} table; skipped");
            out.orphans.push(Orphan { visit_id: id, missing_from });
            continue;
        };
        let first = diag[0];
        let mut provenance = Vec::new();
        let mut codes = BTreeSet::new();
        let mut dx = Vec::new();
        let from_table = diag.iter().map(|d| Diagnosis { code: d.code.clone(), name: d.name.clone() });
        let from_records = recs.iter().filter_map(|r| split_code_name(&r.diagnosis));
        for d in from_table.chain(from_records) {
            if !d.code.is_empty() && codes.insert(d.code.clone()) {
                dx.push(d);
            }
        }
        let mut narrative: Vec<NarrativeField> = Vec::new();
        for r in recs.iter().filter(|r| !r.condition_type.is_empty()) {
            match narrative.iter_mut().find(|f| f.name == r.condition_type) {
                Some(f) if !r.value.is_empty() => {
                    f.text.push(' ');
                    f.text.push_str(&r.value);
                }
                Some(_) => {}
                None => narrative.push(NarrativeField { name: r.condition_type.clone(), text: r.value.clone() }),
            }
        }
        let textual = recs.iter().map(|r| r.visit_time.as_str()).find(|t| is_textual_time(t));
        let visit_time = match textual {
            Some(t) => t.to_string(),
            None => {
                let serial = diag.iter().find_map(|d| d.visit_time.parse::<f64>().ok().and_then(serial_to_datetime));
                match serial {
                    Some(t) => {
                        provenance.push(format!("visit time converted from spreadsheet serial {}", first.visit_time));
                        t
                    }
                    None => first.visit_time.clone(),
                }
            }
        };
        out.cases.push(MergedCase {
            visit_id: id,
            gender: first.gender.clone(),
            age: first.age.clone(),
            age_unit: first.age_unit.clone(),
            visit_time,
            department: first.department.clone(),
            clinic_type: first.clinic_type.clone(),
            record_type: recs[0].record_type.clone(),
            diagnoses: dx,
            narrative_fields: narrative,
            provenance,
        });
    }
    out
}
