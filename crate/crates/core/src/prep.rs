//! Loader for the DBLP-Scholar bibliographic matching benchmark.
//!
//! Expects `DBLP2.csv`, `Scholar.csv` (columns `id,title,authors,venue,year`)
//! and `DBLP-Scholar_perfectMapping.csv` (`idDBLP,idScholar`) in one
//! directory. Files that are not valid UTF-8 are decoded as Latin-1, which
//! is how the public distribution ships `DBLP2.csv`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::dataset::{Dataset, Record};
use crate::error::{Error, Result};
use crate::eval::LabelSet;
use crate::model::RecordId;

pub const DBLP_FILE: &str = "DBLP2.csv";
pub const SCHOLAR_FILE: &str = "Scholar.csv";
pub const MAPPING_FILE: &str = "DBLP-Scholar_perfectMapping.csv";

pub const BIBLIO_COLUMNS: [&str; 6] = ["source", "source_id", "title", "authors", "venue", "year"];

/// Both sources as one dataset (DBLP rows first) plus the complete match labels.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub dataset: Dataset,
    pub labels: LabelSet,
    pub left_records: usize,
    pub right_records: usize,
    /// Mapping rows whose ids are missing from either source.
    pub unresolved_mappings: usize,
}

fn decode(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode(&bytes).trim_start_matches('\u{feff}').to_string())
}

fn header_index(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name)).ok_or_else(|| Error::Ingest {
        path: path.to_path_buf(),
        row: 1,
        message: format!("missing column {name:?}"),
    })
}

fn load_source(
    path: &Path,
    source: &str,
    dataset: &mut Dataset,
    ids: &mut HashMap<(String, String), RecordId>,
) -> Result<usize> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = ["id", "title", "authors", "venue", "year"]
        .iter()
        .map(|c| header_index(path, &headers, c))
        .collect::<Result<_>>()?;
    let mut n = 0;
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Ingest { path: path.to_path_buf(), row: i + 2, message: e.to_string() })?;
        let field = |c: usize| row.get(cols[c]).unwrap_or("").trim().to_string();
        let source_id = field(0);
        let rid = RecordId(dataset.records.len() as u64);
        if ids.insert((source.to_string(), source_id.clone()), rid).is_some() {
            return Err(Error::Ingest { path: path.to_path_buf(), row: i + 2, message: format!("duplicate id {source_id:?}") });
        }
        let mut values = vec![vec![source.to_string()], vec![source_id]];
        for c in 1..5 {
            let v = field(c);
            values.push(if v.is_empty() { Vec::new() } else { vec![v] });
        }
        dataset.records.push(Record { rid, values });
        n += 1;
    }
    Ok(n)
}

pub fn load_dblp_scholar(dir: &Path) -> Result<Benchmark> {
    let path = |f: &str| -> PathBuf { dir.join(f) };
    let mut dataset = Dataset::new(BIBLIO_COLUMNS.iter().map(|c| c.to_string()).collect());
    let mut ids = HashMap::new();
    let left_records = load_source(&path(DBLP_FILE), "dblp", &mut dataset, &mut ids)?;
    let right_records = load_source(&path(SCHOLAR_FILE), "scholar", &mut dataset, &mut ids)?;

    let mapping = path(MAPPING_FILE);
    let text = read_text(&mapping)?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let (a, b) = (header_index(&mapping, &headers, "idDBLP")?, header_index(&mapping, &headers, "idScholar")?);
    let mut pairs = Vec::new();
    let mut unresolved = 0;
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Ingest { path: mapping.clone(), row: i + 2, message: e.to_string() })?;
        let l = ids.get(&("dblp".to_string(), row.get(a).unwrap_or("").trim().to_string()));
        let r = ids.get(&("scholar".to_string(), row.get(b).unwrap_or("").trim().to_string()));
        match (l, r) {
            (Some(l), Some(r)) => pairs.push((*l, *r)),
            _ => unresolved += 1,
        }
    }
    if unresolved > 0 {
        tracing::warn!(unresolved, "mapping rows reference unknown ids");
    }
    Ok(Benchmark {
        dataset,
        labels: LabelSet::new(pairs, true),
        left_records,
        right_records,
        unresolved_mappings: unresolved,
    })
}
