//! Conversion of columnar or delimited source datasets to JSON Lines.
//!
//! `.parquet` files are read row by row; any other file is read as CSV with
//! a header row (all values become strings). Rows keep the source column
//! order as key order.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parquet::data_type::{ByteArray, ByteArrayType};
use parquet::file::properties::WriterProperties;
use parquet::file::reader::{FileReader, SerializedFileReader};
use parquet::file::writer::SerializedFileWriter;
use parquet::schema::parser::parse_message_type;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::jsonl::{write_jsonl, BadLine};
use super::schema::{validate_value, Schema};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConvertReport {
    pub rows_read: usize,
    pub rows_written: usize,
    /// Rows failing the requested schema, by 1-based row number.
    pub rejected: Vec<BadLine>,
}

fn is_parquet(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("parquet"))
}

pub fn read_rows(path: &Path) -> Result<Vec<Map<String, Value>>, ConvertError> {
    let format = |detail: String| ConvertError::Format { path: path.to_path_buf(), detail };
    if is_parquet(path) {
        let file = File::open(path).map_err(|source| ConvertError::Io { path: path.to_path_buf(), source })?;
        let reader = SerializedFileReader::new(file).map_err(|e| format(e.to_string()))?;
        let rows = reader.get_row_iter(None).map_err(|e| format(e.to_string()))?;
        rows.map(|row| match row.map_err(|e| format(e.to_string()))?.to_json_value() {
            Value::Object(map) => Ok(map),
            other => Err(format(format!("row is not an object: {other}"))),
        })
        .collect()
    } else {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| format(e.to_string()))?;
        let headers = rdr.headers().map_err(|e| format(e.to_string()))?.clone();
        rdr.records()
            .map(|r| {
                let r = r.map_err(|e| format(e.to_string()))?;
                Ok(headers.iter().zip(r.iter()).map(|(h, v)| (h.to_string(), Value::String(v.to_string()))).collect())
            })
            .collect()
    }
}

/// Converts `input` to JSON Lines at `output`. With a schema, rows that fail
/// it are reported and left out.
pub fn convert_to_jsonl(input: &Path, output: &Path, schema: Option<Schema>) -> Result<ConvertReport, ConvertError> {
    let rows = read_rows(input)?;
    let mut report = ConvertReport { rows_read: rows.len(), ..Default::default() };
    let mut kept = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let value = Value::Object(row);
        let violations = schema.map(|s| validate_value(&value, s)).unwrap_or_default();
        if violations.is_empty() {
            kept.push(value);
        } else {
            report.rejected.push(BadLine { line: i + 1, violations });
        }
    }
    report.rows_written = kept.len();
    write_jsonl(output, &kept).map_err(|source| ConvertError::Io { path: output.to_path_buf(), source })?;
    Ok(report)
}

/// Writes a parquet file of required UTF-8 string columns.
pub fn write_string_parquet(path: &Path, columns: &[&str], rows: &[Vec<String>]) -> Result<(), ConvertError> {
    let format = |detail: String| ConvertError::Format { path: path.to_path_buf(), detail };
    let fields: String = columns.iter().map(|c| format!("REQUIRED BYTE_ARRAY {c} (UTF8); ")).collect();
    let schema = Arc::new(parse_message_type(&format!("message rows {{ {fields}}}")).map_err(|e| format(e.to_string()))?);
    let file = File::create(path).map_err(|source| ConvertError::Io { path: path.to_path_buf(), source })?;
    let props = Arc::new(WriterProperties::builder().set_created_by("snomed-kg".into()).build());
    let mut writer = SerializedFileWriter::new(file, schema, props).map_err(|e| format(e.to_string()))?;
    let mut group = writer.next_row_group().map_err(|e| format(e.to_string()))?;
    for k in 0..columns.len() {
        let values: Vec<ByteArray> = rows.iter().map(|r| ByteArray::from(r[k].as_str())).collect();
        let mut column = group.next_column().map_err(|e| format(e.to_string()))?.expect("one writer per column");
        column.typed::<ByteArrayType>().write_batch(&values, None, None).map_err(|e| format(e.to_string()))?;
        column.close().map_err(|e| format(e.to_string()))?;
    }
    group.close().map_err(|e| format(e.to_string()))?;
    writer.close().map_err(|e| format(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const COLUMNS: [&str; 4] = ["input", "output", "instruction", "data_source"];

    fn rows() -> Vec<Vec<String>> {
        vec![
            vec!["[Patient] a\n[Doctor] b".into(), "out, with comma".into(), "do it".into(), "src".into()],
            vec!["no markers".into(), "o".into(), "i".into(), "s".into()],
        ]
    }

    #[test]
    fn parquet_and_csv_convert_alike() {
        let dir = tempfile::tempdir().unwrap();
        let pq = dir.path().join("train.parquet");
        write_string_parquet(&pq, &COLUMNS, &rows()).unwrap();
        let csv_path = dir.path().join("train.csv");
        let mut w = csv::Writer::from_path(&csv_path).unwrap();
        w.write_record(COLUMNS).unwrap();
        for r in rows() {
            w.write_record(&r).unwrap();
        }
        w.flush().unwrap();

        let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        let ra = convert_to_jsonl(&pq, &a, None).unwrap();
        let rb = convert_to_jsonl(&csv_path, &b, None).unwrap();
        assert_eq!(ra.rows_written, 2);
        assert_eq!(rb.rows_written, 2);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let first = std::fs::read_to_string(&a).unwrap().lines().next().unwrap().to_string();
        assert!(first.starts_with("{\"input\":"));

        let checked = convert_to_jsonl(&pq, &a, Some(Schema::Platypus)).unwrap();
        assert_eq!(checked.rows_written, 1);
        assert_eq!(checked.rejected[0].line, 2);
    }
}
