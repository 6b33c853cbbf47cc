// SPDX-License-Identifier: Apache-2.0

//! Data acquisition: JSON-RPC fetching, reputation labels, benign sampling
//! and dataset persistence.

mod dataset;
mod labels;
mod rpc;
mod sampling;
pub mod wire;

pub use dataset::{load_dataset, load_raw, persist_dataset, save_raw, schema_path};
pub use labels::{import_labels, IdKind, Label, LabelEntry, LabelKey, LabelStore, MergeSummary};
pub use rpc::{RpcClient, RpcEndpoint, RPC_URL_ENV};
pub use sampling::{sample_benign, sample_from_blocks, BenignSample};
pub use wire::BlockSummary;
