// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

/// Every failure the toolkit can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid calldata: {0}")]
    InvalidCalldata(String),

    #[error("directory parse error at line {line}: {reason}")]
    DirectoryParse { line: usize, reason: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("record mismatch: transaction {tx} vs receipt {receipt}")]
    RecordMismatch { tx: String, receipt: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("rpc error: {0}")]
    Rpc(String),

    #[error("malformed rpc response: {0}")]
    RpcSchema(String),

    #[error("invalid address: {0}")]
    InvalidAddress(String),

    #[error("invalid hash: {0}")]
    InvalidHash(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short variant name, used for reporting.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidCalldata(_) => "InvalidCalldata",
            Error::DirectoryParse { .. } => "DirectoryParseError",
            Error::EmptyDataset => "EmptyDataset",
            Error::RecordMismatch { .. } => "RecordMismatch",
            Error::Schema(_) => "SchemaError",
            Error::DegenerateLabels(_) => "DegenerateLabels",
            Error::ModelFormat(_) => "ModelFormatError",
            Error::Dimension(_) => "DimensionError",
            Error::Divergence(_) => "DivergenceError",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NotFound(_) => "NotFound",
            Error::Rpc(_) => "RpcError",
            Error::RpcSchema(_) => "RpcSchemaError",
            Error::InvalidAddress(_) => "InvalidAddress",
            Error::InvalidHash(_) => "InvalidHash",
            Error::Io { .. } => "IoError",
        }
    }

    /// One-line hint on how to get past the error.
    pub fn remedy(&self) -> &'static str {
        match self {
            Error::InvalidCalldata(_) => "calldata must be \"0x\" followed by hex digits",
            Error::DirectoryParse { .. } => {
                "each row must be `0x<8 hex>,<signature>,<benign|malicious|unknown>`"
            }
            Error::EmptyDataset => "provide at least one row",
            Error::RecordMismatch { .. } => "pair each transaction with its own receipt",
            Error::Schema(_) => "rebuild the dataset so every row shares one feature schema",
            Error::DegenerateLabels(_) => "the data must contain both benign and malicious rows",
            Error::ModelFormat(_) => "re-train and re-save the model with this version",
            Error::Dimension(_) => "check that row width matches the fitted model",
            Error::Divergence(_) => "lower the learning rate or enable standardization",
            Error::InvalidConfig(_) => "fix the offending configuration value",
            Error::NotFound(_) => "check the hash or wait for the transaction to be mined",
            Error::Rpc(_) => "check --rpc-url / SENTINEL_RPC_URL and node availability",
            Error::RpcSchema(_) => "the node returned an unexpected payload; check the endpoint",
            Error::InvalidAddress(_) => "addresses are 0x followed by 40 hex digits",
            Error::InvalidHash(_) => "hashes are 0x followed by 64 hex digits",
            Error::Io { .. } => "check that the path exists and is writable",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
