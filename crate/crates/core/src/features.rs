// SPDX-License-Identifier: Apache-2.0

//! Gas-economics feature extraction.
//!
//! A row combines raw transaction and receipt fields, five ratio aggregators
//! and the calldata octet counts. The aggregators measure how far a sender
//! over-bids or over-provisions gas relative to what was actually consumed.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::calldata::{input_length, octet_features, CalldataInput, OctetFeatures, SignatureDirectory};
use crate::{Error, Result};

/// Value used for absent EIP-1559 fields and undefined ratios.
pub const SENTINEL: f64 = -1.0;

/// Emitted feature names, in schema order.
pub const FEATURE_NAMES: [&str; 22] = [
    "gas",
    "gas_price",
    "max_fee_per_gas",
    "max_priority_fee_per_gas",
    "value",
    "tx_type",
    "gas_used",
    "effective_gas_price",
    "cumulative_gas_used",
    "log_count",
    "status",
    "to_is_contract",
    "input_length",
    "gas_used_ratio",
    "fee_overhead",
    "tip_ratio",
    "value_per_gas",
    "block_position_ratio",
    "n_octets",
    "valid_octet",
    "benign_octet",
    "mal_octet",
];

/// Features denominated in wei; `build_dataset` maps them through log10(1+x).
pub const WEI_FEATURES: [&str; 6] = [
    "gas_price",
    "max_fee_per_gas",
    "max_priority_fee_per_gas",
    "value",
    "effective_gas_price",
    "value_per_gas",
];

/// Features describing the gas bid or gas consumption of a transaction.
pub const GAS_FEATURES: [&str; 11] = [
    "gas",
    "gas_price",
    "max_fee_per_gas",
    "max_priority_fee_per_gas",
    "gas_used",
    "effective_gas_price",
    "cumulative_gas_used",
    "gas_used_ratio",
    "fee_overhead",
    "tip_ratio",
    "block_position_ratio",
];

pub fn is_gas_feature(name: &str) -> bool {
    GAS_FEATURES.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub hash: String,
    pub from_addr: String,
    /// Absent for contract creation.
    pub to_addr: Option<String>,
    pub gas: u64,
    pub gas_price: u128,
    pub max_fee_per_gas: Option<u128>,
    pub max_priority_fee_per_gas: Option<u128>,
    pub value: u128,
    pub input: CalldataInput,
    pub tx_type: u8,
    pub block_number: u64,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptRecord {
    pub tx_hash: String,
    pub gas_used: u64,
    pub effective_gas_price: u128,
    pub cumulative_gas_used: u64,
    pub log_count: u64,
    pub status: u8,
    pub to_is_contract: bool,
}

/// Named feature values plus an optional label (`true` = malicious).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub values: IndexMap<String, f64>,
    pub label: Option<bool>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    num / den.max(1.0)
}

/// Builds the raw (untransformed) feature vector for one transaction.
pub fn extract_features(tx: &TransactionRecord, rc: &ReceiptRecord, oct: &OctetFeatures) -> Result<FeatureVector> {
    if !tx.hash.eq_ignore_ascii_case(&rc.tx_hash) {
        return Err(Error::RecordMismatch { tx: tx.hash.clone(), receipt: rc.tx_hash.clone() });
    }
    let opt = |v: Option<u128>| v.map_or(SENTINEL, |x| x as f64);
    let gas = tx.gas as f64;
    let gas_price = tx.gas_price as f64;
    let gas_used = rc.gas_used as f64;
    let effective = rc.effective_gas_price as f64;

    let gas_used_ratio = if tx.gas == 0 { 0.0 } else { gas_used / gas };
    let tip_ratio = match (tx.max_priority_fee_per_gas, tx.max_fee_per_gas) {
        (Some(tip), Some(cap)) => ratio(tip as f64, cap as f64),
        _ => SENTINEL,
    };
    let values = [
        gas,
        gas_price,
        opt(tx.max_fee_per_gas),
        opt(tx.max_priority_fee_per_gas),
        tx.value as f64,
        f64::from(tx.tx_type),
        gas_used,
        effective,
        rc.cumulative_gas_used as f64,
        rc.log_count as f64,
        f64::from(rc.status),
        f64::from(u8::from(rc.to_is_contract)),
        input_length(&tx.input) as f64,
        gas_used_ratio,
        ratio(effective - gas_price, gas_price),
        tip_ratio,
        ratio(tx.value as f64, gas_used),
        ratio(gas_used, rc.cumulative_gas_used as f64),
        oct.n_octets as f64,
        oct.valid_octet as f64,
        oct.benign_octet as f64,
        oct.mal_octet as f64,
    ];
    let values = FEATURE_NAMES.iter().map(|n| n.to_string()).zip(values).collect();
    Ok(FeatureVector { values, label: None })
}

/// Sanity findings that do not prevent feature extraction.
pub fn quality_warnings(tx: &TransactionRecord, rc: &ReceiptRecord) -> Vec<String> {
    let mut out = Vec::new();
    if rc.gas_used > tx.gas {
        out.push(format!("{}: gas_used {} exceeds gas limit {}", tx.hash, rc.gas_used, tx.gas));
    }
    if rc.gas_used > rc.cumulative_gas_used {
        out.push(format!(
            "{}: gas_used {} exceeds cumulative_gas_used {}",
            tx.hash, rc.gas_used, rc.cumulative_gas_used
        ));
    }
    out
}

/// log10(1+x) for non-negative values; sentinels pass through.
pub fn log_scale(x: f64) -> f64 {
    if x < 0.0 {
        x
    } else {
        (1.0 + x).log10()
    }
}

/// A transaction, its receipt and its label (`true` = malicious).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTransaction {
    pub tx: TransactionRecord,
    pub receipt: ReceiptRecord,
    pub label: bool,
}

/// Featurizes a labeled corpus, preserving row order.
pub fn build_dataset(rows: &[LabeledTransaction], dir: &SignatureDirectory) -> Result<Vec<FeatureVector>> {
    let mut out: Vec<FeatureVector> = Vec::with_capacity(rows.len());
    for row in rows {
        let oct = octet_features(&row.tx.input, dir);
        let mut fv = extract_features(&row.tx, &row.receipt, &oct)?;
        for name in WEI_FEATURES {
            if let Some(v) = fv.values.get_mut(name) {
                *v = log_scale(*v);
            }
        }
        if let Some((name, v)) = fv.values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Schema(format!("{}: non-finite feature {name} = {v}", row.tx.hash)));
        }
        fv.label = Some(row.label);
        if let Some(first) = out.first() {
            if !first.names().eq(fv.names()) {
                return Err(Error::Schema(format!("{}: feature names differ from first row", row.tx.hash)));
            }
        }
        out.push(fv);
    }
    Ok(out)
}

/// One dense, schema-aligned row.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub values: Vec<f64>,
    pub label: Option<bool>,
}

/// Dense table of feature rows sharing one schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub schema: Vec<String>,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Vec<String>) -> Self {
        Dataset { schema, records: Vec::new() }
    }

    /// Aligns named vectors onto one schema; the first row fixes the schema.
    pub fn from_vectors<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, FeatureVector)>,
    {
        let mut ds = Dataset::default();
        for (i, (id, fv)) in rows.into_iter().enumerate() {
            if i == 0 {
                ds.schema = fv.names().map(str::to_string).collect();
            }
            ds.push(id, &fv)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, id: String, fv: &FeatureVector) -> Result<()> {
        if fv.values.len() != self.schema.len() {
            return Err(Error::Schema(format!(
                "row {id} has {} features, schema has {}",
                fv.values.len(),
                self.schema.len()
            )));
        }
        let values = self
            .schema
            .iter()
            .map(|name| fv.get(name).ok_or_else(|| Error::Schema(format!("row {id} lacks feature {name}"))))
            .collect::<Result<Vec<_>>>()?;
        self.records.push(Record { id, values, label: fv.label });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|n| n == name)
    }

    pub fn to_vector(&self, record: &Record) -> FeatureVector {
        FeatureVector {
            values: self.schema.iter().cloned().zip(record.values.iter().copied()).collect(),
            label: record.label,
        }
    }

    /// Labels of every row; fails if any row is unlabeled.
    pub fn labels(&self) -> Result<Vec<bool>> {
        self.records
            .iter()
            .map(|r| r.label.ok_or_else(|| Error::Schema(format!("row {} is unlabeled", r.id))))
            .collect()
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.values.clone()).collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Record) -> bool) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }
}
