// SPDX-License-Identifier: Apache-2.0

//! Test support: a local JSON-RPC server replaying recorded responses, and
//! the reference-listing loader for bytecode fixtures.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub const TX_EIP1559: &str = "0x88df016429689c079f3b2f6ad39fa052532c56795b733da78a91ebe6a713944b";
pub const TX_TOKEN: &str = "0x2f1c5c2b44f771e942a8506148e256f94f1a464babc938ae0690c6e34cd79190";
pub const TX_MISSING: &str = "0xeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeeee";
pub const EOA: &str = "0x388c818ca8b9251b393131c08a736a67ccb19297";
pub const TOKEN: &str = "0xdac17f958d2ee523a2206206994597c13d831ec7";
pub const SENDER: &str = "0x4838b106fce9647bdf1e7877bf73ce8b0bad5f97";
pub const FIXTURE_BLOCK: u64 = 18_400_012;
pub const EMPTY_BLOCK: u64 = 18_400_013;

pub struct ReplayServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    handle: Option<JoinHandle<()>>,
}

impl ReplayServer {
    /// Serves `recorded.json`; the first `fail_first` requests get HTTP 503.
    pub fn start(fail_first: usize) -> Self {
        let recorded: Vec<Value> = serde_json::from_str(
            &std::fs::read_to_string(fixtures_dir().join("rpc/recorded.json")).unwrap(),
        )
        .unwrap();
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let (srv, count) = (server.clone(), requests.clone());
        let handle = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let n = count.fetch_add(1, Ordering::SeqCst);
                if n < fail_first {
                    let _ = req.respond(tiny_http::Response::from_string("busy").with_status_code(503));
                    continue;
                }
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let call: Value = serde_json::from_str(&body).unwrap();
                let hit = recorded.iter().find(|r| r["method"] == call["method"] && r["params"] == call["params"]);
                let reply = match hit {
                    Some(r) => json!({"jsonrpc": "2.0", "id": call["id"], "result": r["result"]}),
                    None if call["method"] == "eth_getCode" => {
                        json!({"jsonrpc": "2.0", "id": call["id"], "result": "0x"})
                    }
                    None if call["method"].as_str().is_some_and(|m| m.starts_with("eth_get")) => {
                        json!({"jsonrpc": "2.0", "id": call["id"], "result": null})
                    }
                    None => json!({"jsonrpc": "2.0", "id": call["id"],
                                   "error": {"code": -32601, "message": "method not found"}}),
                };
                let header = tiny_http::Header::from_bytes("content-type", "application/json").unwrap();
                let _ = req.respond(tiny_http::Response::from_string(reply.to_string()).with_header(header));
            }
        });
        ReplayServer { url, requests, server, handle: Some(handle) }
    }
}

impl Drop for ReplayServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// A URL nothing listens on.
pub fn refused_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefInstruction {
    pub offset: usize,
    pub byte: u8,
    pub mnemonic: String,
    pub immediate: Vec<u8>,
}

/// Reference listing plus the offset of a trailing truncated PUSH, if any.
pub fn load_reference(path: &Path) -> (Vec<RefInstruction>, Option<usize>) {
    let mut out = Vec::new();
    let mut truncated = None;
    for line in std::fs::read_to_string(path).unwrap().lines().skip(1) {
        if let Some(rest) = line.strip_prefix("#truncated,") {
            truncated = Some(rest.parse().unwrap());
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        out.push(RefInstruction {
            offset: cols[0].parse().unwrap(),
            byte: u8::from_str_radix(cols[1], 16).unwrap(),
            mnemonic: cols[2].to_string(),
            immediate: hex::decode(cols[3]).unwrap(),
        });
    }
    (out, truncated)
}

/// Bytecode fixture names (without extension), sorted.
pub fn bytecode_fixtures() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir().join("bytecode"))
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.strip_suffix(".ref.csv").map(str::to_string)
        })
        .collect();
    names.sort();
    names
}

/// Runtime code from an `eth_getCode` response file.
pub fn fixture_code(name: &str) -> Vec<u8> {
    let v: Value = serde_json::from_str(
        &std::fs::read_to_string(fixtures_dir().join(format!("bytecode/{name}.json"))).unwrap(),
    )
    .unwrap();
    sentinel_core::ingest::wire::parse_code(&v["result"]).unwrap()
}

/// The reference tool predates some renames and the London/Shanghai opcodes.
pub fn reference_name_matches(ours: &str, byte: u8, reference: &str) -> bool {
    match reference {
        "SHA3" => ours == "KECCAK256",
        "DIFFICULTY" => ours == "PREVRANDAO",
        "GETPC" => ours == "PC",
        "INVALID" if byte != 0xfe => {
            ours.starts_with("UNKNOWN_0x") || (byte == 0x48 && ours == "BASEFEE") || (byte == 0x5f && ours == "PUSH0")
        }
        other => ours == other,
    }
}
