// SPDX-License-Identifier: Apache-2.0

//! JSON-lines persistence for feature datasets and raw records.
//!
//! A dataset at `data.jsonl` holds one `{"tx_hash", "features", "label"}`
//! object per line, with the feature schema written to `data.schema.json`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde_json::{json, Value};

use crate::features::{Dataset, FeatureVector, LabeledTransaction};
use crate::{Error, Result};

/// `data.jsonl` → `data.schema.json`.
pub fn schema_path(path: &Path) -> PathBuf {
    path.with_extension("schema.json")
}

pub fn persist_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in &ds.records {
        let features: serde_json::Map<String, Value> =
            ds.schema.iter().cloned().zip(r.values.iter().map(|v| json!(v))).collect();
        let mut row = json!({ "tx_hash": r.id, "features": features });
        if let Some(label) = r.label {
            row["label"] = json!(u8::from(label));
        }
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    let manifest = schema_path(path);
    let text = serde_json::to_string_pretty(&ds.schema).expect("schema serializes");
    std::fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))
}

fn parse_row(line: &str, line_no: usize, schema: &[String]) -> Result<(String, FeatureVector)> {
    let err = |m: String| Error::Schema(format!("line {line_no}: {m}"));
    let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    let id = v.get("tx_hash").and_then(Value::as_str).unwrap_or_default().to_string();
    let feats = v.get("features").and_then(Value::as_object).ok_or_else(|| err("missing \"features\"".into()))?;
    let mut values = IndexMap::with_capacity(schema.len());
    for name in schema {
        let x = feats
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| err(format!("missing numeric feature {name:?}")))?;
        values.insert(name.clone(), x);
    }
    if feats.len() != schema.len() {
        return Err(err(format!("{} features, manifest lists {}", feats.len(), schema.len())));
    }
    let label = match v.get("label") {
        None | Some(Value::Null) => None,
        Some(l) => match l.as_u64() {
            Some(0) => Some(false),
            Some(1) => Some(true),
            _ => return Err(err(format!("label {l} is not 0 or 1"))),
        },
    };
    Ok((id, FeatureVector { values, label }))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest = schema_path(path);
    let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let schema: Vec<String> =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", manifest.display())))?;
    let mut ds = Dataset::new(schema);
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, fv) = parse_row(&line, idx + 1, &ds.schema)?;
        ds.push(id, &fv)?;
    }
    Ok(ds)
}

/// Writes fetched records, one `LabeledTransaction` per line.
pub fn save_raw(rows: &[LabeledTransaction], path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in rows {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_raw(path: &Path) -> Result<Vec<LabeledTransaction>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Schema(format!("line {}: {e}", idx + 1)))?,
        );
    }
    Ok(out)
}
