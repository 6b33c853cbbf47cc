// SPDX-License-Identifier: Apache-2.0

//! Detection of malicious Ethereum contracts and transactions.
//!
//! The pipeline turns on-chain data into features and models:
//!
//! - [`evm`] disassembles contract bytecode into opcode sequences.
//! - [`calldata`] parses transaction input and counts 4-byte selector hits.
//! - [`features`] builds gas-economics feature vectors.
//! - [`model`] is a gradient-boosted tree classifier.
//! - [`metrics`] computes ROC, AUC and precision-recall.
//! - [`bayesnet`] learns and compares opcode-occurrence DAGs.
//! - [`anomaly`] holds PCA and a benign-only autoencoder.
//! - [`ingest`] talks JSON-RPC, imports labels and persists datasets.
//! - [`synth`] generates seeded synthetic corpora.

pub mod anomaly;
pub mod bayesnet;
pub mod calldata;
mod error;
pub mod evm;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
pub use features::{Dataset, FeatureVector, Record};
