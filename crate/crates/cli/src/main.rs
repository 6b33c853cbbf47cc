// SPDX-License-Identifier: Apache-2.0

//! `sentinel`: ingest, featurize, train, evaluate and report.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::PipelineConfig;

const PRECEDENCE: &str = "Settings precedence, lowest to highest: built-in defaults, the --config file, \
the SENTINEL_RPC_URL environment variable, command-line flags. All outputs go under --out.";

#[derive(Debug, Parser)]
#[command(name = "sentinel", version, about = "Malicious transaction and contract detection pipeline", after_help = PRECEDENCE)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON-RPC endpoint; overrides SENTINEL_RPC_URL and the config file.
    #[arg(long, global = true)]
    pub rpc_url: Option<String>,
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print full error details.
    #[arg(long, global = true)]
    pub debug: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch labeled transactions, sample benign ones, persist raw records.
    Ingest(IngestArgs),
    /// Disassemble bytecode into a listing or normalized tokens.
    Disasm(DisasmArgs),
    /// Build the feature dataset and signature statistics from raw records.
    Features(FeaturesArgs),
    /// Train the boosted-tree classifier.
    Train(TrainArgs),
    /// ROC, precision-recall, AUC and feature-importance reports.
    Eval(EvalArgs),
    /// Learn per-class opcode DAGs and their difference.
    Bayesnet(BayesnetArgs),
    /// Autoencoder fitting, anomaly scoring and PCA projection.
    #[command(subcommand)]
    Anomaly(AnomalyCommand),
    /// Render a stored CSV (roc, pr, importance, projection) to SVG.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Label CSV with columns kind,id,label,source.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Source name for rows with an empty source column; defaults to the file stem.
    #[arg(long)]
    pub source: Option<String>,
    /// Signature directory CSV; when given, the feature dataset is built too.
    #[arg(long)]
    pub directory: Option<PathBuf>,
    #[arg(long)]
    pub per_block: Option<usize>,
    /// Sample benign transactions from the latest N blocks instead of the malicious ones' blocks.
    #[arg(long, value_name = "N")]
    pub latest: Option<u64>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct DisasmSource {
    /// Bytecode as 0x-prefixed hex.
    #[arg(long, group = "source")]
    pub hex: Option<String>,
    /// Contract address to fetch code for.
    #[arg(long, group = "source")]
    pub address: Option<String>,
    /// File holding hex bytecode.
    #[arg(long, group = "source")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DisasmArgs {
    #[command(flatten)]
    pub source: DisasmSource,
    /// Print normalized tokens, one per line, instead of the listing.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Raw records written by `ingest`.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long)]
    pub directory: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Fraction of rows held out (stratified) and written to test.jsonl.
    #[arg(long)]
    pub holdout: Option<f64>,
    #[arg(long)]
    pub trees: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BayesnetArgs {
    /// CSV of `label,bytecode` rows; label is benign/malicious or 0/1.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Raw,
    Latent,
}

#[derive(Debug, Subcommand)]
pub enum AnomalyCommand {
    /// Fit the autoencoder on the benign rows of a dataset.
    Fit {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score every row by reconstruction error.
    Score {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Project rows onto principal components.
    Project {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Autoencoder for the latent space; fitted on the fly when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "latent")]
        space: Space,
        #[arg(long, default_value_t = 2)]
        components: usize,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV produced by eval, anomaly project or features.
    #[arg(long)]
    pub input: PathBuf,
}

fn load_config(cli: &Cli) -> sentinel_core::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(url) = sentinel_core::ingest::RpcEndpoint::resolve_url(cli.rpc_url.as_deref()) {
        cfg.rpc.url = url;
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    match load_config(&cli).and_then(|cfg| commands::run(&cli, &cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            eprintln!("  remedy: {}", e.remedy());
            if cli.debug {
                eprintln!("{e:#?}");
                let mut source = std::error::Error::source(&e);
                while let Some(s) = source {
                    eprintln!("  caused by: {s}");
                    source = s.source();
                }
            }
            ExitCode::from(1)
        }
    }
}
