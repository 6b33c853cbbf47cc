// SPDX-License-Identifier: Apache-2.0

//! Decoding of JSON-RPC wire objects into records.

use serde_json::Value;

use crate::calldata::CalldataInput;
use crate::features::TransactionRecord;
use crate::{Error, Result};

fn schema(msg: impl Into<String>) -> Error {
    Error::RpcSchema(msg.into())
}

/// Decodes a hex quantity (`0x1a`) into 128 bits.
///
/// Leading zeros are ignored; anything wider than 128 bits is rejected.
pub fn parse_quantity(s: &str) -> Result<u128> {
    let digits = s.strip_prefix("0x").ok_or_else(|| schema(format!("quantity {s:?} lacks 0x")))?;
    if !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(schema(format!("quantity {s:?} is not hex")));
    }
    let significant = digits.trim_start_matches('0');
    if significant.len() > 32 {
        return Err(schema(format!("quantity {s:?} exceeds 128 bits")));
    }
    if significant.is_empty() {
        return Ok(0);
    }
    u128::from_str_radix(significant, 16).map_err(|e| schema(format!("quantity {s:?}: {e}")))
}

pub fn parse_quantity_u64(s: &str) -> Result<u64> {
    let v = parse_quantity(s)?;
    u64::try_from(v).map_err(|_| schema(format!("quantity {s:?} exceeds 64 bits")))
}

fn is_hex_id(s: &str, hex_len: usize) -> bool {
    s.len() == 2 + hex_len && s.starts_with("0x") && s[2..].bytes().all(|b| b.is_ascii_hexdigit())
}

/// Lowercases and checks a 20-byte address.
pub fn normalize_address(s: &str) -> Result<String> {
    if is_hex_id(s, 40) {
        Ok(s.to_ascii_lowercase())
    } else {
        Err(Error::InvalidAddress(s.to_string()))
    }
}

/// Lowercases and checks a 32-byte hash.
pub fn normalize_hash(s: &str) -> Result<String> {
    if is_hex_id(s, 64) {
        Ok(s.to_ascii_lowercase())
    } else {
        Err(Error::InvalidHash(s.to_string()))
    }
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(format!("missing field {key:?}")))
}

fn str_field<'a>(obj: &'a Value, key: &str) -> Result<&'a str> {
    field(obj, key)?.as_str().ok_or_else(|| schema(format!("field {key:?} is not a string")))
}

fn opt_str<'a>(obj: &'a Value, key: &str) -> Result<Option<&'a str>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(schema(format!("field {key:?} is not a string"))),
    }
}

fn quantity(obj: &Value, key: &str) -> Result<u128> {
    parse_quantity(str_field(obj, key)?)
}

fn quantity_u64(obj: &Value, key: &str) -> Result<u64> {
    parse_quantity_u64(str_field(obj, key)?)
}

/// `eth_getTransactionByHash` result object.
pub fn parse_transaction(v: &Value) -> Result<TransactionRecord> {
    if !v.is_object() {
        return Err(schema("transaction is not an object"));
    }
    let hash = normalize_hash(str_field(v, "hash")?).map_err(|e| schema(e.to_string()))?;
    let to_addr = opt_str(v, "to")?
        .map(|s| normalize_address(s).map_err(|e| schema(e.to_string())))
        .transpose()?;
    let input = opt_str(v, "input")?.or(opt_str(v, "data")?).unwrap_or("0x");
    let tx_type = match opt_str(v, "type")? {
        Some(t) => parse_quantity(t)?,
        None => 0,
    };
    if tx_type > 3 {
        return Err(schema(format!("unsupported transaction type {tx_type}")));
    }
    let block_number = opt_str(v, "blockNumber")?.map(parse_quantity_u64).transpose()?.unwrap_or(0);
    let opt_q = |k: &str| -> Result<Option<u128>> { opt_str(v, k)?.map(parse_quantity).transpose() };
    Ok(TransactionRecord {
        hash,
        from_addr: normalize_address(str_field(v, "from")?).map_err(|e| schema(e.to_string()))?,
        to_addr,
        gas: quantity_u64(v, "gas")?,
        gas_price: opt_q("gasPrice")?.unwrap_or(0),
        max_fee_per_gas: opt_q("maxFeePerGas")?,
        max_priority_fee_per_gas: opt_q("maxPriorityFeePerGas")?,
        value: quantity(v, "value")?,
        input: CalldataInput::parse(input).map_err(|e| schema(e.to_string()))?,
        tx_type: tx_type as u8,
        block_number,
        nonce: quantity_u64(v, "nonce")?,
    })
}

/// Receipt fields before the `to` address has been checked for code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiptFields {
    pub tx_hash: String,
    pub to_addr: Option<String>,
    pub gas_used: u64,
    pub effective_gas_price: u128,
    pub cumulative_gas_used: u64,
    pub log_count: u64,
    pub status: u8,
    pub block_number: u64,
}

/// `eth_getTransactionReceipt` result object.
pub fn parse_receipt(v: &Value) -> Result<ReceiptFields> {
    if !v.is_object() {
        return Err(schema("receipt is not an object"));
    }
    let logs = field(v, "logs")?.as_array().ok_or_else(|| schema("\"logs\" is not an array"))?;
    let status = match opt_str(v, "status")? {
        Some(s) => parse_quantity(s)?,
        // pre-Byzantium receipts carry a state root instead
        None => 1,
    };
    if status > 1 {
        return Err(schema(format!("status {status} is not 0 or 1")));
    }
    Ok(ReceiptFields {
        tx_hash: normalize_hash(str_field(v, "transactionHash")?).map_err(|e| schema(e.to_string()))?,
        to_addr: opt_str(v, "to")?
            .map(|s| normalize_address(s).map_err(|e| schema(e.to_string())))
            .transpose()?,
        gas_used: quantity_u64(v, "gasUsed")?,
        effective_gas_price: opt_str(v, "effectiveGasPrice")?.map(parse_quantity).transpose()?.unwrap_or(0),
        cumulative_gas_used: quantity_u64(v, "cumulativeGasUsed")?,
        log_count: logs.len() as u64,
        status: status as u8,
        block_number: quantity_u64(v, "blockNumber")?,
    })
}

/// `eth_getCode` result string.
pub fn parse_code(v: &Value) -> Result<Vec<u8>> {
    let s = v.as_str().ok_or_else(|| schema("code is not a string"))?;
    let body = s.strip_prefix("0x").ok_or_else(|| schema("code lacks 0x"))?;
    hex::decode(body).map_err(|e| schema(format!("code is not hex: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSummary {
    pub number: u64,
    pub tx_hashes: Vec<String>,
}

/// `eth_getBlockByNumber` result in either full-transaction or hash-only form.
pub fn parse_block(v: &Value) -> Result<BlockSummary> {
    let txs = field(v, "transactions")?.as_array().ok_or_else(|| schema("\"transactions\" is not an array"))?;
    let tx_hashes = txs
        .iter()
        .map(|t| {
            let h = match t {
                Value::String(s) => s.as_str(),
                obj => str_field(obj, "hash")?,
            };
            normalize_hash(h).map_err(|e| schema(e.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok(BlockSummary { number: quantity_u64(v, "number")?, tx_hashes })
}
