//! CSV ingestion: one point per row, comma-separated reals, optional header.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure::Dataset;

/// Identifies the input a report was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub n: usize,
    pub d: usize,
    pub sha256: String,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    load_dataset_with_digest(path).map(|(data, _)| data)
}

pub fn load_dataset_with_digest(path: impl AsRef<Path>) -> Result<(Dataset, InputDigest)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let data = parse_dataset(&bytes)?;
    let digest = InputDigest {
        path: path.display().to_string(),
        n: data.len(),
        d: data.dim(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    Ok((data, digest))
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, message: message.into() }
}

/// Parses CSV text. The first row is a header when any of its fields is not a
/// number; every other row must hold the same number of finite reals.
pub fn parse_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last_line = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(last_line + 1, |p| p.line());
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(last_line + 1, |p| p.line());
        last_line = line;

        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if index == 0 && parsed.iter().any(Option::is_none) {
            continue;
        }
        let mut row = Vec::with_capacity(parsed.len());
        for (column, (value, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
            match value {
                Some(v) if v.is_finite() => row.push(v),
                _ => return Err(parse_error(line, format!("column {}: {raw:?} is not a finite number", column + 1))),
            }
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_error(line, format!("expected {} fields, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(last_line + 1, "no data rows"));
    }
    Dataset::from_rows(&rows).map_err(|e| parse_error(1, e.to_string()))
}
