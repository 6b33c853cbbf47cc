// SPDX-License-Identifier: Apache-2.0

//! Blocking JSON-RPC 2.0 client over HTTP.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::wire::{self, BlockSummary};
use crate::features::{ReceiptRecord, TransactionRecord};
use crate::{Error, Result};

/// Environment variable consulted when no URL is given explicitly.
pub const RPC_URL_ENV: &str = "SENTINEL_RPC_URL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpcEndpoint {
    pub url: String,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_concurrent_requests: usize,
    /// First retry delay; doubles on each further attempt.
    #[serde(with = "millis")]
    pub backoff_base: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;
    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_secs)
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;
    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

impl Default for RpcEndpoint {
    fn default() -> Self {
        RpcEndpoint {
            url: String::new(),
            timeout: Duration::from_secs(30),
            max_retries: 3,
            max_concurrent_requests: 8,
            backoff_base: Duration::from_millis(250),
        }
    }
}

impl RpcEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        RpcEndpoint { url: url.into(), ..Default::default() }
    }

    /// Explicit URL if given, else `SENTINEL_RPC_URL`.
    pub fn resolve_url(explicit: Option<&str>) -> Option<String> {
        explicit.map(str::to_string).or_else(|| std::env::var(RPC_URL_ENV).ok()).filter(|u| !u.is_empty())
    }

    pub fn validate(&self) -> Result<()> {
        if self.url.is_empty() {
            return Err(Error::InvalidConfig(format!("no RPC URL; pass --rpc-url or set {RPC_URL_ENV}")));
        }
        if self.max_concurrent_requests == 0 {
            return Err(Error::InvalidConfig("rpc.max_concurrent_requests must be >= 1".into()));
        }
        Ok(())
    }
}

/// One failed attempt, classified for the retry loop.
enum Attempt {
    Retryable(String),
    Fatal(Error),
}

pub struct RpcClient {
    endpoint: RpcEndpoint,
    agent: ureq::Agent,
    next_id: AtomicU64,
    /// Sleeps performed between retries, for observability.
    backoffs: Mutex<Vec<Duration>>,
}

impl RpcClient {
    pub fn new(endpoint: RpcEndpoint) -> Result<Self> {
        endpoint.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(endpoint.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(RpcClient { endpoint, agent, next_id: AtomicU64::new(1), backoffs: Mutex::new(Vec::new()) })
    }

    pub fn endpoint(&self) -> &RpcEndpoint {
        &self.endpoint
    }

    /// Delays slept before each retry so far.
    pub fn backoff_history(&self) -> Vec<Duration> {
        self.backoffs.lock().expect("backoff lock").clone()
    }

    fn attempt(&self, body: &Value) -> std::result::Result<Value, Attempt> {
        let mut resp = self
            .agent
            .post(&self.endpoint.url)
            .header("content-type", "application/json")
            .send_json(body)
            .map_err(|e| Attempt::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retryable(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(Error::Rpc(format!("HTTP {status}"))));
        }
        let text = resp.body_mut().read_to_string().map_err(|e| Attempt::Retryable(e.to_string()))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Attempt::Fatal(Error::RpcSchema(format!("response is not JSON: {e}"))))?;
        if let Some(err) = v.get("error").filter(|e| !e.is_null()) {
            let code = err.get("code").and_then(Value::as_i64).unwrap_or(0);
            let msg = err.get("message").and_then(Value::as_str).unwrap_or("");
            return Err(Attempt::Fatal(Error::Rpc(format!("node error {code}: {msg}"))));
        }
        match v.get("result") {
            Some(r) => Ok(r.clone()),
            None => Err(Attempt::Fatal(Error::RpcSchema("response has neither result nor error".into()))),
        }
    }

    /// Sends one request, retrying transport failures, HTTP 429 and 5xx with
    /// exponential backoff. Returns the `result` member, which may be null.
    pub fn call(&self, method: &str, params: Value) -> Result<Value> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let body = json!({ "jsonrpc": "2.0", "id": id, "method": method, "params": params });
        let mut delay = self.endpoint.backoff_base;
        let mut last = String::new();
        for attempt in 0..=self.endpoint.max_retries {
            if attempt > 0 {
                self.backoffs.lock().expect("backoff lock").push(delay);
                std::thread::sleep(delay);
                delay = delay.saturating_mul(2);
            }
            match self.attempt(&body) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(msg)) => last = msg,
            }
        }
        Err(Error::Rpc(format!(
            "{method} failed after {} attempts: {last}",
            self.endpoint.max_retries + 1
        )))
    }

    fn call_non_null(&self, method: &str, params: Value, what: &str) -> Result<Value> {
        let v = self.call(method, params)?;
        if v.is_null() {
            return Err(Error::NotFound(what.to_string()));
        }
        Ok(v)
    }

    pub fn fetch_transaction(&self, tx_hash: &str) -> Result<TransactionRecord> {
        let hash = wire::normalize_hash(tx_hash)?;
        let v = self.call_non_null("eth_getTransactionByHash", json!([hash]), &format!("transaction {hash}"))?;
        wire::parse_transaction(&v)
    }

    pub fn fetch_code(&self, address: &str) -> Result<Vec<u8>> {
        let addr = wire::normalize_address(address)?;
        let v = self.call("eth_getCode", json!([addr, "latest"]))?;
        wire::parse_code(&v)
    }

    /// Receipt plus a code lookup deciding `to_is_contract`.
    pub fn fetch_receipt(&self, tx_hash: &str) -> Result<ReceiptRecord> {
        let hash = wire::normalize_hash(tx_hash)?;
        let v = self.call_non_null("eth_getTransactionReceipt", json!([hash]), &format!("receipt {hash}"))?;
        let fields = wire::parse_receipt(&v)?;
        let to_is_contract = match &fields.to_addr {
            Some(addr) => !self.fetch_code(addr)?.is_empty(),
            None => false,
        };
        Ok(ReceiptRecord {
            tx_hash: fields.tx_hash,
            gas_used: fields.gas_used,
            effective_gas_price: fields.effective_gas_price,
            cumulative_gas_used: fields.cumulative_gas_used,
            log_count: fields.log_count,
            status: fields.status,
            to_is_contract,
        })
    }

    pub fn fetch_block(&self, number: u64) -> Result<BlockSummary> {
        let v = self.call_non_null(
            "eth_getBlockByNumber",
            json!([format!("0x{number:x}"), true]),
            &format!("block {number}"),
        )?;
        wire::parse_block(&v)
    }

    pub fn block_number(&self) -> Result<u64> {
        let v = self.call("eth_blockNumber", json!([]))?;
        wire::parse_quantity_u64(v.as_str().ok_or_else(|| Error::RpcSchema("block number is not a string".into()))?)
    }

    /// Runs `f` over `items` with at most `max_concurrent_requests` in flight.
    /// Results come back in input order.
    pub fn fetch_many<T, R, F>(&self, items: &[T], f: F) -> Vec<Result<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&Self, &T) -> Result<R> + Sync,
    {
        let workers = self.endpoint.max_concurrent_requests.min(items.len()).max(1);
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<R>>>> = items.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(item) = items.get(i) else { break };
                    let r = f(self, item);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
            .collect()
    }
}
