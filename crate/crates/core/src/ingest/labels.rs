// SPDX-License-Identifier: Apache-2.0

//! Reputation labels imported from manually exported CSV lists.
//!
//! An id that has been labeled both malicious and benign is quarantined: it
//! is removed from the store and stays out no matter which label arrives
//! next, so merge order never decides a label.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::wire::{normalize_address, normalize_hash};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdKind {
    Address,
    TxHash,
}

impl IdKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IdKind::Address => "address",
            IdKind::TxHash => "tx_hash",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Malicious,
    Benign,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Malicious => "malicious",
            Label::Benign => "benign",
        }
    }

    pub fn is_malicious(self) -> bool {
        self == Label::Malicious
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub label: Label,
    pub source: String,
    /// Seconds since the Unix epoch.
    pub observed_at: u64,
}

pub type LabelKey = (IdKind, String);

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelStore {
    pub entries: BTreeMap<LabelKey, LabelEntry>,
    pub quarantined: BTreeSet<LabelKey>,
}

/// Outcome of one merge or import.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MergeSummary {
    pub added: usize,
    /// Rows that repeated an existing identical label.
    pub deduplicated: usize,
    /// Ids rejected because they carry both labels.
    pub conflicts: Vec<LabelKey>,
    /// `(line, reason)` for rows that could not be parsed.
    pub skipped: Vec<(usize, String)>,
}

impl LabelStore {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, kind: IdKind, id: &str) -> Option<&LabelEntry> {
        self.entries.get(&(kind, id.to_ascii_lowercase()))
    }

    pub fn is_malicious(&self, kind: IdKind, id: &str) -> bool {
        self.get(kind, id).is_some_and(|e| e.label.is_malicious())
    }

    pub fn ids(&self, kind: IdKind, label: Label) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(move |((k, _), e)| *k == kind && e.label == label)
            .map(|((_, id), _)| id.as_str())
    }

    /// Adds one labeled id, applying the dedup and quarantine rules.
    pub fn merge_one(&mut self, key: LabelKey, entry: LabelEntry, summary: &mut MergeSummary) {
        if self.quarantined.contains(&key) {
            summary.conflicts.push(key);
            return;
        }
        match self.entries.get_mut(&key) {
            None => {
                self.entries.insert(key, entry);
                summary.added += 1;
            }
            Some(existing) if existing.label == entry.label => {
                // keep the metadata independent of arrival order
                if (entry.source.as_str(), entry.observed_at) < (existing.source.as_str(), existing.observed_at) {
                    *existing = entry;
                }
                summary.deduplicated += 1;
            }
            Some(_) => {
                self.entries.remove(&key);
                self.quarantined.insert(key.clone());
                summary.conflicts.push(key);
            }
        }
    }

    pub fn merge(&mut self, other: &LabelStore) -> MergeSummary {
        let mut summary = MergeSummary::default();
        for key in &other.quarantined {
            if self.entries.remove(key).is_some() || !self.quarantined.contains(key) {
                summary.conflicts.push(key.clone());
            }
            self.quarantined.insert(key.clone());
        }
        for (key, entry) in &other.entries {
            self.merge_one(key.clone(), entry.clone(), &mut summary);
        }
        summary
    }

    /// Parses `kind,id,label,source` rows. Bad rows are skipped and reported.
    pub fn import_csv(&mut self, text: &str, default_source: &str, observed_at: u64) -> MergeSummary {
        let mut summary = MergeSummary::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("kind,")) {
                continue;
            }
            match parse_row(line, default_source) {
                Ok((key, label, source)) => {
                    self.merge_one(key, LabelEntry { label, source, observed_at }, &mut summary)
                }
                Err(reason) => summary.skipped.push((line_no, reason)),
            }
        }
        summary
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,id,label,source\n");
        for ((kind, id), e) in &self.entries {
            out.push_str(&format!("{},{id},{},{}\n", kind.as_str(), e.label.as_str(), e.source));
        }
        out
    }
}

fn parse_row(line: &str, default_source: &str) -> std::result::Result<(LabelKey, Label, String), String> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(3..=4).contains(&cols.len()) {
        return Err(format!("expected 4 columns, found {}", cols.len()));
    }
    let kind = match cols[0] {
        "address" => IdKind::Address,
        "tx_hash" => IdKind::TxHash,
        other => return Err(format!("unknown kind {other:?}")),
    };
    let id = match kind {
        IdKind::Address => normalize_address(cols[1]),
        IdKind::TxHash => normalize_hash(cols[1]),
    }
    .map_err(|e| e.to_string())?;
    let label = match cols[2] {
        "malicious" => Label::Malicious,
        "benign" => Label::Benign,
        other => return Err(format!("unknown label {other:?}")),
    };
    let source = cols.get(3).filter(|s| !s.is_empty()).copied().unwrap_or(default_source);
    Ok(((kind, id), label, source.to_string()))
}

/// Reads a label CSV into `store`; `source_name` fills rows with an empty source column.
pub fn import_labels(store: &mut LabelStore, path: &Path, source_name: &str) -> Result<MergeSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(store.import_csv(&text, source_name, now))
}
