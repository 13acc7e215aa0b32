//! JSON Lines reading and writing.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::schema::{validate_record, SchemaRecord, Violation};

/// A line that failed validation on read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BadLine {
    pub line: usize,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsonlRead<T> {
    pub records: Vec<T>,
    pub bad_lines: Vec<BadLine>,
}

/// One compact JSON object per line, LF-terminated.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads and validates every non-blank line; invalid lines are reported by
/// 1-based line number and skipped.
pub fn read_jsonl<T: SchemaRecord>(path: &Path) -> io::Result<JsonlRead<T>> {
    let mut read = JsonlRead { records: Vec::new(), bad_lines: Vec::new() };
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let checked = validate_record(&line, T::SCHEMA).and_then(|()| {
            serde_json::from_str(&line)
                .map_err(|e| vec![Violation { path: String::new(), message: format!("does not deserialize: {e}") }])
        });
        match checked {
            Ok(record) => read.records.push(record),
            Err(violations) => read.bad_lines.push(BadLine { line: i + 1, violations }),
        }
    }
    Ok(read)
}

/// Reads lines as untyped JSON values, skipping blank lines.
pub fn read_values(path: &Path) -> io::Result<Vec<(usize, Result<serde_json::Value, String>)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push((i + 1, serde_json::from_str(&line).map_err(|e| e.to_string())));
        }
    }
    Ok(out)
}
