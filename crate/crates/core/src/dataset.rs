//! In-memory records and their ingestion from delimited text or JSON lines.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RecordId;

/// One input record. `values[c]` holds the values of column `c`; an empty
/// list means the attribute is null. JSON arrays give multi-valued columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub rid: RecordId,
    pub values: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, records: Vec::new() }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a single-valued record with the next row ordinal as its id.
    pub fn push_row<S: AsRef<str>>(&mut self, row: &[Option<S>]) {
        let rid = RecordId(self.records.len() as u64);
        let values = row
            .iter()
            .map(|v| match v {
                Some(s) if !s.as_ref().is_empty() => vec![s.as_ref().to_string()],
                _ => Vec::new(),
            })
            .collect();
        self.records.push(Record { rid, values });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl InputFormat {
    /// `.jsonl` / `.ndjson` / `.json` read as JSON lines, anything else as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReadOptions {
    /// Column holding unsigned 64-bit record ids. Without it, ids are the
    /// zero-based row ordinals.
    pub id_column: Option<String>,
    pub format: Option<InputFormat>,
}

pub fn read_dataset(path: &Path, opts: &ReadOptions) -> Result<Dataset> {
    let format = opts.format.unwrap_or_else(|| InputFormat::from_path(path));
    let dataset = match format {
        InputFormat::Csv => read_csv(path, opts.id_column.as_deref())?,
        InputFormat::Jsonl => read_jsonl(path, opts.id_column.as_deref())?,
    };
    check_unique_ids(path, &dataset)?;
    Ok(dataset)
}

/// Writes `id` followed by the dataset columns as CSV. Multi-valued
/// attributes are joined with a single space.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("id").chain(dataset.columns.iter().map(String::as_str)))?;
    for r in &dataset.records {
        let id = r.rid.0.to_string();
        w.write_record(std::iter::once(id).chain(r.values.iter().map(|v| v.join(" "))))?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

fn parse_id(path: &Path, row: usize, raw: &str) -> Result<RecordId> {
    raw.trim().parse::<u64>().map(RecordId).map_err(|_| Error::Ingest {
        path: path.to_path_buf(),
        row,
        message: format!("record id {raw:?} is not an unsigned 64-bit integer"),
    })
}

fn check_unique_ids(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut seen = HashSet::with_capacity(dataset.len());
    for (row, r) in dataset.records.iter().enumerate() {
        if !seen.insert(r.rid) {
            return Err(Error::Ingest {
                path: path.to_path_buf(),
                row: row + 1,
                message: format!("duplicate record id {}", r.rid),
            });
        }
    }
    Ok(())
}

fn read_csv(path: &Path, id_column: Option<&str>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse(format!("{}: {other:?}", path.display())),
        })?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let id_idx = match id_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Config(format!("id column {name:?} not found in {}", path.display()))
        })?),
        None => None,
    };
    let columns: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| Some(*i) != id_idx).map(|(_, h)| h.clone()).collect();
    let mut dataset = Dataset::new(columns);
    for (ordinal, row) in reader.records().enumerate() {
        let line = ordinal + 1;
        let row = row.map_err(|e| Error::Ingest { path: path.to_path_buf(), row: line, message: e.to_string() })?;
        let rid = match id_idx {
            Some(i) => parse_id(path, line, &row[i])?,
            None => RecordId(ordinal as u64),
        };
        let values = row
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != id_idx)
            .map(|(_, v)| if v.trim().is_empty() { Vec::new() } else { vec![v.to_string()] })
            .collect();
        dataset.records.push(Record { rid, values });
    }
    Ok(dataset)
}

fn json_to_values(v: &serde_json::Value) -> Vec<String> {
    use serde_json::Value;
    match v {
        Value::Null => Vec::new(),
        Value::String(s) if s.trim().is_empty() => Vec::new(),
        Value::String(s) => vec![s.clone()],
        Value::Bool(b) => vec![b.to_string()],
        Value::Number(n) => vec![n.to_string()],
        Value::Array(items) => items.iter().flat_map(json_to_values).collect(),
        Value::Object(_) => vec![v.to_string()],
    }
}

/// Reads JSON objects, one per line. Columns are the union of keys in
/// first-seen order.
fn read_jsonl(path: &Path, id_column: Option<&str>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut columns: Vec<String> = Vec::new();
    let mut rows: Vec<(RecordId, serde_json::Map<String, serde_json::Value>)> = Vec::new();
    let mut ordinal = 0u64;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ingest_err = |message: String| Error::Ingest { path: path.to_path_buf(), row: line_no, message };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| ingest_err(e.to_string()))?;
        let serde_json::Value::Object(mut obj) = value else {
            return Err(ingest_err("expected a JSON object".to_string()));
        };
        let rid = match id_column {
            Some(name) => {
                let raw = obj.remove(name).ok_or_else(|| ingest_err(format!("missing id column {name:?}")))?;
                let text = match &raw {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                parse_id(path, line_no, &text)?
            }
            None => RecordId(ordinal),
        };
        ordinal += 1;
        for k in obj.keys() {
            if !columns.iter().any(|c| c == k) {
                columns.push(k.clone());
            }
        }
        rows.push((rid, obj));
    }
    let records = rows
        .into_iter()
        .map(|(rid, obj)| Record {
            rid,
            values: columns.iter().map(|c| obj.get(c).map(json_to_values).unwrap_or_default()).collect(),
        })
        .collect();
    Ok(Dataset { columns, records })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn csv_assigns_row_ordinals() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "name,city\nTim Jones,Boston\n,Salem\n");
        let d = read_dataset(&p, &ReadOptions::default()).unwrap();
        assert_eq!(d.columns, vec!["name", "city"]);
        assert_eq!(d.records[1].rid, RecordId(1));
        assert!(d.records[1].values[0].is_empty());
        assert_eq!(d.records[0].values[1], vec!["Boston"]);
    }

    #[test]
    fn csv_id_column_is_parsed_and_removed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "id,name\n42,a\n7,b\n");
        let opts = ReadOptions { id_column: Some("id".into()), ..Default::default() };
        let d = read_dataset(&p, &opts).unwrap();
        assert_eq!(d.columns, vec!["name"]);
        assert_eq!(d.records.iter().map(|r| r.rid.0).collect::<Vec<_>>(), vec![42, 7]);
    }

    #[test]
    fn bad_and_duplicate_ids_report_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let opts = ReadOptions { id_column: Some("id".into()), ..Default::default() };
        let p = write(&dir, "bad.csv", "id,name\n1,a\nx,b\n");
        let err = read_dataset(&p, &opts).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 2, .. }), "{err}");
        let p = write(&dir, "dup.csv", "id,name\n1,a\n1,b\n");
        let err = read_dataset(&p, &opts).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 2, .. }), "{err}");
    }

    #[test]
    fn jsonl_supports_multi_valued_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "a.jsonl",
            "{\"id\": 3, \"authors\": [\"a b\", \"c\"], \"year\": 1999}\n\n{\"id\": \"4\", \"title\": \"x\"}\n",
        );
        let opts = ReadOptions { id_column: Some("id".into()), ..Default::default() };
        let d = read_dataset(&p, &opts).unwrap();
        assert_eq!(d.columns, vec!["authors", "year", "title"]);
        assert_eq!(d.records[0].values[0], vec!["a b", "c"]);
        assert_eq!(d.records[0].values[1], vec!["1999"]);
        assert!(d.records[1].values[0].is_empty());
        assert_eq!(d.records[1].rid, RecordId(4));
    }

    #[test]
    fn malformed_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.jsonl", "{\"a\": 1}\n{oops\n");
        let err = read_dataset(&p, &ReadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_dataset(Path::new("/nonexistent/x.csv"), &ReadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn csv_round_trip_keeps_ids() {
        let mut d = Dataset::new(vec!["name".into(), "city".into()]);
        d.push_row(&[Some("Tim, Jr"), None]);
        d.push_row(&[Some("Ann"), Some("Salem")]);
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "rt.csv", std::str::from_utf8(&buf).unwrap());
        let opts = ReadOptions { id_column: Some("id".into()), ..Default::default() };
        assert_eq!(read_dataset(&p, &opts).unwrap(), d);
    }
}
