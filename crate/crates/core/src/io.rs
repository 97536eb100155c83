//! Text formats for pairs, block pair sets and labels.
//!
//! Pair file:
//!
//! ```text
//! # hdb-pairs v1
//! 3,17,0f1e...
//! ```
//!
//! One `rid1,rid2,block_key_hex` line per pair, `rid1 < rid2`, sorted by
//! `(rid1, rid2)`; `block_key_hex` is 32 lowercase hex digits.
//!
//! Block pair file:
//!
//! ```text
//! # hdb-block-pairs v1
//! <block_key_hex> <n> <rid_1> ... <rid_n>
//! <base64 bitmap | ->
//! ```
//!
//! Two lines per block, blocks sorted by key, members ascending. The bitmap
//! holds `n choose 2` bits (least significant bit first) in upper-triangular
//! pair order; `-` means every pair of the block is retained.
//!
//! Label file: `rid1,rid2` per line. Blank lines, `#` comments and a
//! non-numeric header line are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;

use crate::error::{Error, Result};
use crate::eval::{LabelSet, PairSet};
use crate::model::{KeyHash, RecordId};
use crate::pairs::{choose2, BlockPairSet, CandidatePair, PairBitmap};

pub const PAIRS_HEADER: &str = "# hdb-pairs v1";
pub const BLOCK_PAIRS_HEADER: &str = "# hdb-block-pairs v1";

pub fn write_pairs<W: Write>(mut w: W, pairs: &[CandidatePair]) -> std::io::Result<()> {
    writeln!(w, "{PAIRS_HEADER}")?;
    for p in pairs {
        writeln!(w, "{},{},{}", p.rid1.0, p.rid2.0, p.block)?;
    }
    w.flush()
}

pub fn write_block_pairs<W: Write>(mut w: W, blocks: &[BlockPairSet]) -> std::io::Result<()> {
    writeln!(w, "{BLOCK_PAIRS_HEADER}")?;
    for b in blocks {
        write!(w, "{} {}", b.block, b.members.len())?;
        for m in &b.members {
            write!(w, " {}", m.0)?;
        }
        match &b.bitmap {
            Some(bm) => writeln!(w, "\n{}", B64.encode(bm.as_bytes()))?,
            None => writeln!(w, "\n-")?,
        }
    }
    w.flush()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

fn ingest(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Ingest { path: path.to_path_buf(), row, message: message.into() }
}

fn parse_rid(path: &Path, row: usize, s: &str) -> Result<RecordId> {
    s.trim().parse::<u64>().map(RecordId).map_err(|_| ingest(path, row, format!("invalid record id {s:?}")))
}

fn check_header(path: &Path, first: Option<std::io::Result<String>>, expected: &str) -> Result<()> {
    match first {
        Some(Ok(line)) if line.trim_end() == expected => Ok(()),
        Some(Ok(line)) => Err(ingest(path, 1, format!("expected header {expected:?}, found {line:?}"))),
        Some(Err(e)) => Err(Error::io(path, e)),
        None => Err(ingest(path, 1, format!("empty file, expected header {expected:?}"))),
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<CandidatePair>> {
    let mut lines = open(path)?.lines();
    check_header(path, lines.next(), PAIRS_HEADER)?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), Some(k), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(ingest(path, row, "expected rid1,rid2,block_key_hex"));
        };
        let (rid1, rid2) = (parse_rid(path, row, a)?, parse_rid(path, row, b)?);
        if rid1 >= rid2 {
            return Err(ingest(path, row, "pair must satisfy rid1 < rid2"));
        }
        let block = KeyHash::from_hex(k).map_err(|e| ingest(path, row, e.to_string()))?;
        out.push(CandidatePair { rid1, rid2, block });
    }
    Ok(out)
}

pub fn read_block_pairs(path: &Path) -> Result<Vec<BlockPairSet>> {
    let mut lines = open(path)?.lines();
    check_header(path, lines.next(), BLOCK_PAIRS_HEADER)?;
    let mut out = Vec::new();
    let mut row = 1;
    while let Some(head) = lines.next() {
        row += 1;
        let head = head.map_err(|e| Error::io(path, e))?;
        if head.is_empty() {
            continue;
        }
        let mut fields = head.split(' ');
        let block = KeyHash::from_hex(fields.next().unwrap_or_default()).map_err(|e| ingest(path, row, e.to_string()))?;
        let n: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ingest(path, row, "missing member count"))?;
        let members = fields.map(|s| parse_rid(path, row, s)).collect::<Result<Vec<_>>>()?;
        if members.len() != n {
            return Err(ingest(path, row, format!("expected {n} members, found {}", members.len())));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ingest(path, row, "members must be strictly ascending"));
        }
        row += 1;
        let bits = match lines.next() {
            Some(l) => l.map_err(|e| Error::io(path, e))?,
            None => return Err(ingest(path, row, "missing bitmap line")),
        };
        let bitmap = match bits.trim() {
            "-" => None,
            enc => {
                let bytes = B64.decode(enc).map_err(|e| ingest(path, row, format!("bad bitmap: {e}")))?;
                let bm = PairBitmap::from_bytes(choose2(n), bytes)
                    .ok_or_else(|| ingest(path, row, "bitmap length does not match block size"))?;
                Some(bm)
            }
        };
        out.push(BlockPairSet { block, members, bitmap });
    }
    Ok(out)
}

/// Reads `rid1,rid2` lines into canonical pairs.
pub fn read_label_pairs(path: &Path) -> Result<PairSet> {
    let mut pairs = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(ingest(path, row, "expected rid1,rid2"));
        }
        let parsed = (fields[0].trim().parse::<u64>(), fields[1].trim().parse::<u64>());
        match parsed {
            (Ok(a), Ok(b)) => pairs.push((RecordId(a), RecordId(b))),
            _ if pairs.is_empty() && row == 1 => continue,
            _ => return Err(ingest(path, row, format!("invalid record id pair {line:?}"))),
        }
    }
    Ok(PairSet::from_pairs(pairs))
}

pub fn read_labels(path: &Path, complete: bool) -> Result<LabelSet> {
    Ok(LabelSet { positives: read_label_pairs(path)?, complete })
}

pub fn write_label_pairs<W: Write>(mut w: W, labels: &PairSet) -> std::io::Result<()> {
    writeln!(w, "rid1,rid2")?;
    for (a, b) in labels.iter() {
        writeln!(w, "{},{}", a.0, b.0)?;
    }
    w.flush()
}
