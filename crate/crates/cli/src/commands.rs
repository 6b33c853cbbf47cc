// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use sentinel_core::anomaly::{ae_fit_with_report, pca_fit, projection_csv, AutoencoderModel, Standardizer};
use sentinel_core::bayesnet::{dag_diff, learn_structure, BinaryDataset, Dag};
use sentinel_core::calldata::{load_directory, signature_stats, SignatureDirectory};
use sentinel_core::evm::{disassemble, normalize_sequence, top_k_vocabulary, OpcodeSequence};
use sentinel_core::features::{build_dataset, is_gas_feature, quality_warnings, LabeledTransaction, FEATURE_NAMES};
use sentinel_core::ingest::{
    import_labels, load_dataset, load_raw, persist_dataset, sample_benign, save_raw, IdKind, LabelStore, RpcClient,
};
use sentinel_core::metrics::{auc, distinct_thresholds, precision_recall, roc_curve, PrPoint, RocPoint, ScoredLabels};
use sentinel_core::model::{load_model, save_model, train_with_report};
use sentinel_core::{Dataset, Error, Result};

use crate::config::PipelineConfig;
use crate::report;
use crate::{AnomalyCommand, BayesnetArgs, Cli, Command, DisasmArgs, EvalArgs, FeaturesArgs, IngestArgs, ReportArgs, Space, TrainArgs};

pub fn run(cli: &Cli, cfg: &PipelineConfig) -> Result<()> {
    let ctx = Ctx { out: cli.out.clone(), cfg };
    match &cli.command {
        Command::Disasm(a) => disasm(&ctx, a),
        cmd => {
            std::fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
            // the effective settings, minus the endpoint URL, which may embed a key
            let mut shown = cfg.clone();
            shown.rpc.url.clear();
            ctx.write("config.toml", &shown.to_toml())?;
            match cmd {
                Command::Ingest(a) => ingest(&ctx, a),
                Command::Features(a) => features(&ctx, a),
                Command::Train(a) => train(&ctx, a),
                Command::Eval(a) => eval(&ctx, a),
                Command::Bayesnet(a) => bayesnet(&ctx, a),
                Command::Anomaly(a) => anomaly(&ctx, a),
                Command::Report(a) => render(&ctx, a),
                Command::Disasm(_) => unreachable!(),
            }
        }
    }
}

struct Ctx<'a> {
    out: PathBuf,
    cfg: &'a PipelineConfig,
}

impl Ctx<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Flag, then config file, then the default location under `--out`.
    fn input(&self, flag: &Option<PathBuf>, configured: &Option<PathBuf>, default: &str) -> PathBuf {
        flag.clone().or_else(|| configured.clone()).unwrap_or_else(|| self.out(default))
    }

    fn dataset(&self, flag: &Option<PathBuf>) -> PathBuf {
        self.input(flag, &self.cfg.paths.dataset, "dataset.jsonl")
    }

    fn directory(&self, flag: &Option<PathBuf>) -> Result<Option<SignatureDirectory>> {
        flag.as_ref().or(self.cfg.paths.directory.as_ref()).map(|p| load_directory(p)).transpose()
    }

    fn client(&self) -> Result<RpcClient> {
        RpcClient::new(self.cfg.rpc.clone())
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        report::write(&self.out(name), contents)
    }
}

fn ingest(ctx: &Ctx, args: &IngestArgs) -> Result<()> {
    let labels_path = args
        .labels
        .clone()
        .or_else(|| ctx.cfg.paths.labels.clone())
        .ok_or_else(|| Error::InvalidConfig("no label file; pass --labels or set paths.labels".into()))?;
    let source = args
        .source
        .clone()
        .unwrap_or_else(|| labels_path.file_stem().map_or("labels".into(), |s| s.to_string_lossy().into_owned()));
    let mut store = LabelStore::default();
    let summary = import_labels(&mut store, &labels_path, &source)?;
    let mut notes: Vec<String> = summary.skipped.iter().map(|(line, why)| format!("label line {line} skipped: {why}")).collect();
    notes.extend(summary.conflicts.iter().map(|(k, id)| format!("{} {id} quarantined: conflicting labels", k.as_str())));
    let client = ctx.client()?;

    let labeled: Vec<(String, bool)> = store
        .entries
        .iter()
        .filter(|((kind, _), _)| *kind == IdKind::TxHash)
        .map(|((_, id), e)| (id.clone(), e.label.is_malicious()))
        .collect();
    let mut txs = Vec::new();
    for ((hash, label), r) in labeled.iter().zip(client.fetch_many(&labeled, |c, (h, _)| c.fetch_transaction(h))) {
        match r {
            Ok(tx) => txs.push((tx, *label)),
            Err(Error::NotFound(what)) => notes.push(format!("{hash}: {what} not found; skipped")),
            Err(e) => return Err(e),
        }
    }

    let per_block = args.per_block.unwrap_or(ctx.cfg.ingest.per_block);
    let blocks: Vec<u64> = match args.latest {
        Some(0) => return Err(Error::InvalidConfig("--latest must be >= 1".into())),
        Some(n) => {
            let head = client.block_number()?;
            (head.saturating_sub(n - 1)..=head).collect()
        }
        None => {
            let mut b: Vec<u64> = txs.iter().filter(|(_, m)| *m).map(|(t, _)| t.block_number).collect();
            b.dedup();
            b
        }
    };
    let sample = sample_benign(&client, &blocks, per_block, ctx.cfg.ingest.seed, &store)?;
    notes.extend(sample.notes);
    let known: BTreeSet<String> = txs.iter().map(|(t, _)| t.hash.clone()).collect();
    let extra: Vec<String> = sample
        .tx_hashes
        .into_iter()
        .filter(|h| !known.contains(h) && store.get(IdKind::TxHash, h).is_none())
        .collect();
    for (hash, r) in extra.iter().zip(client.fetch_many(&extra, |c, h| c.fetch_transaction(h))) {
        match r {
            Ok(tx) => txs.push((tx, false)),
            Err(Error::NotFound(_)) => notes.push(format!("{hash}: sampled transaction not found; skipped")),
            Err(e) => return Err(e),
        }
    }

    let mut rows = Vec::new();
    for ((tx, label), r) in txs.iter().zip(client.fetch_many(&txs, |c, (t, _)| c.fetch_receipt(&t.hash))) {
        match r {
            Ok(receipt) => rows.push(LabeledTransaction { tx: tx.clone(), receipt, label: *label }),
            Err(Error::NotFound(_)) => notes.push(format!("{}: no receipt (pending?); skipped", tx.hash)),
            Err(e) => return Err(e),
        }
    }
    save_raw(&rows, &ctx.out("raw.jsonl"))?;
    ctx.write("labels.csv", &store.to_csv())?;
    let mut quarantine = String::from("kind,id\n");
    for (k, id) in &store.quarantined {
        let _ = writeln!(quarantine, "{},{id}", k.as_str());
    }
    ctx.write("quarantine.csv", &quarantine)?;

    let addresses: Vec<(String, bool)> = store
        .entries
        .iter()
        .filter(|((kind, _), _)| *kind == IdKind::Address)
        .map(|((_, id), e)| (id.clone(), e.label.is_malicious()))
        .collect();
    let mut contracts = String::from("label,bytecode\n");
    for ((addr, malicious), r) in addresses.iter().zip(client.fetch_many(&addresses, |c, (a, _)| c.fetch_code(a))) {
        let code = r?;
        if code.is_empty() {
            notes.push(format!("{addr}: no code (not a contract); skipped"));
            continue;
        }
        let _ = writeln!(contracts, "{},0x{}", if *malicious { "malicious" } else { "benign" }, hex::encode(code));
    }
    ctx.write("contracts.csv", &contracts)?;

    if let Some(dir) = ctx.directory(&args.directory)? {
        write_dataset(ctx, &rows, &dir)?;
    }
    ctx.write("ingest_notes.txt", &notes.iter().map(|n| format!("{n}\n")).collect::<String>())?;
    let n_mal = rows.iter().filter(|r| r.label).count();
    println!(
        "ingested {} transactions ({n_mal} malicious, {} benign), {} contracts; {} labels added, {} conflicts, {} notes",
        rows.len(),
        rows.len() - n_mal,
        contracts.lines().count() - 1,
        summary.added,
        summary.conflicts.len(),
        notes.len()
    );
    Ok(())
}

fn write_dataset(ctx: &Ctx, rows: &[LabeledTransaction], dir: &SignatureDirectory) -> Result<Dataset> {
    let vectors = build_dataset(rows, dir)?;
    let ds = if rows.is_empty() {
        Dataset::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect())
    } else {
        Dataset::from_vectors(rows.iter().map(|r| r.tx.hash.clone()).zip(vectors))?
    };
    persist_dataset(&ds, &ctx.out("dataset.jsonl"))?;
    Ok(ds)
}

fn parse_hex_code(raw: &str) -> Result<Vec<u8>> {
    let body = raw.trim();
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).unwrap_or(body);
    hex::decode(body).map_err(|e| Error::InvalidConfig(format!("bytecode is not valid hex: {e}")))
}

fn disasm(ctx: &Ctx, args: &DisasmArgs) -> Result<()> {
    let src = &args.source;
    let (code, source_id) = if let Some(h) = &src.hex {
        (parse_hex_code(h)?, "hex".to_string())
    } else if let Some(addr) = &src.address {
        (ctx.client()?.fetch_code(addr)?, addr.clone())
    } else {
        let path = src.file.as_ref().expect("clap enforces one source");
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        (parse_hex_code(&text)?, path.display().to_string())
    };
    let seq = disassemble(&code).with_source(source_id);
    if args.normalize {
        ctx.cfg.normalize.validate()?;
        for t in normalize_sequence(&seq, &ctx.cfg.normalize) {
            println!("{t}");
        }
    } else {
        print!("{}", seq.listing());
    }
    Ok(())
}

fn features(ctx: &Ctx, args: &FeaturesArgs) -> Result<()> {
    let raw_path = args.raw.clone().unwrap_or_else(|| ctx.out("raw.jsonl"));
    let rows = load_raw(&raw_path)?;
    let dir = match ctx.directory(&args.directory)? {
        Some(d) => d,
        None => {
            eprintln!("note: no signature directory given; octet features will all be zero");
            SignatureDirectory::default()
        }
    };
    let ds = write_dataset(ctx, &rows, &dir)?;
    let warnings: Vec<String> = rows.iter().flat_map(|r| quality_warnings(&r.tx, &r.receipt)).collect();
    ctx.write("quality_warnings.txt", &warnings.iter().map(|w| format!("{w}\n")).collect::<String>())?;

    if !rows.is_empty() {
        let stats = signature_stats(rows.iter().map(|r| (&r.tx.input, r.label)), &dir)?;
        ctx.write("signature_stats.json", &(serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"))?;
        let mut csv = String::from("class,selector,signature,count\n");
        let mut ranked = Vec::new();
        for (class, cs) in [("benign", &stats.benign), ("malicious", &stats.malicious)] {
            let mut sel: Vec<(&String, &usize)> = cs.selector_hist.iter().collect();
            sel.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            for (s, n) in &sel {
                let _ = writeln!(csv, "{class},{s},\"{}\",{n}", dir.lookup(s).unwrap_or(""));
            }
            ranked.push((class, sel));
        }
        ctx.write("signatures.csv", &csv)?;
        let mut only = String::from("selector,signature\n");
        for s in &stats.malicious_only {
            let _ = writeln!(only, "{s},\"{}\"", dir.lookup(s).unwrap_or(""));
        }
        ctx.write("malicious_only.csv", &only)?;
        for (class, sel) in ranked {
            let bars: Vec<(String, f64)> = sel
                .iter()
                .take(30)
                .map(|(s, n)| (dir.lookup(s).map_or_else(|| s.to_string(), str::to_string), **n as f64))
                .collect();
            ctx.write(
                &format!("signatures_{class}.svg"),
                &report::bar_svg(&format!("Signatures' histogram ({class})"), "Function signature", "Transactions", &bars),
            )?;
        }
        println!(
            "{} rows, {} features; {} malicious-only selectors; {} quality warnings",
            ds.len(),
            ds.schema.len(),
            stats.malicious_only.len(),
            warnings.len()
        );
    } else {
        println!("0 rows; wrote an empty dataset");
    }
    Ok(())
}

/// Stratified split; returns (train, test).
fn split(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("--holdout must be in (0, 1), got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = vec![false; ds.len()];
    for class in [Some(false), Some(true), None] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.records[i].label == class).collect();
        idx.shuffle(&mut rng);
        let n = (idx.len() as f64 * fraction).round() as usize;
        for &i in idx.iter().take(n) {
            test[i] = true;
        }
    }
    let pick = |want: bool| Dataset {
        schema: ds.schema.clone(),
        records: ds.records.iter().zip(&test).filter(|(_, &t)| t == want).map(|(r, _)| r.clone()).collect(),
    };
    Ok((pick(false), pick(true)))
}

fn scored(model_scores: Vec<f64>, ds: &Dataset) -> Result<ScoredLabels> {
    ScoredLabels::new(model_scores, ds.labels()?)
}

fn train(ctx: &Ctx, args: &TrainArgs) -> Result<()> {
    let ds = load_dataset(&ctx.dataset(&args.dataset))?;
    let mut tc = ctx.cfg.train.clone();
    if let Some(n) = args.trees {
        tc.n_trees = n;
    }
    let (train_ds, test_ds) = match args.holdout {
        Some(f) => {
            let (a, b) = split(&ds, f, tc.rng_seed)?;
            persist_dataset(&a, &ctx.out("train.jsonl"))?;
            persist_dataset(&b, &ctx.out("test.jsonl"))?;
            (a, Some(b))
        }
        None => (ds, None),
    };
    let (model, rep) = train_with_report(&train_ds, &tc)?;
    save_model(&model, &ctx.out("model.json"))?;
    let mut loss = String::from("round,loss\n");
    for (i, l) in rep.loss.iter().enumerate() {
        let _ = writeln!(loss, "{i},{l}");
    }
    ctx.write("train_loss.csv", &loss)?;
    print!(
        "trained {} trees on {} rows (positive weight {:.3}); loss {:.5} -> {:.5}",
        model.trees.len(),
        train_ds.len(),
        rep.positive_class_weight,
        rep.loss[0],
        rep.loss[rep.loss.len() - 1]
    );
    match test_ds {
        Some(t) if !t.is_empty() => match scored(model.predict_dataset(&t)?, &t).and_then(|sl| auc(&sl)) {
            Ok(a) => println!("; holdout AUC {a:.4} on {} rows", t.len()),
            Err(_) => println!("; holdout has a single class, AUC undefined"),
        },
        _ => println!(),
    }
    Ok(())
}

fn eval(ctx: &Ctx, args: &EvalArgs) -> Result<()> {
    let model = load_model(&ctx.input(&args.model, &ctx.cfg.paths.model, "model.json"))?;
    let ds = load_dataset(&ctx.dataset(&args.dataset))?;
    let scores = model.predict_dataset(&ds)?;
    let mut score_csv = String::from("tx_hash,label,score\n");
    for (r, s) in ds.records.iter().zip(&scores) {
        let _ = writeln!(score_csv, "{},{},{s}", r.id, r.label.map_or(String::new(), |l| u8::from(l).to_string()));
    }
    let sl = scored(scores, &ds)?;
    let roc = roc_curve(&sl)?;
    let area = auc(&sl)?;
    let pr = precision_recall(&sl, &distinct_thresholds(&sl))?;
    let mut importance: Vec<(String, f64)> = model.feature_importance().into_iter().collect();
    importance.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let gas_share: f64 = importance.iter().filter(|(n, _)| is_gas_feature(n)).map(|(_, v)| v).sum();

    ctx.write("scores.csv", &score_csv)?;
    report::emit_curves(&ctx.out, &roc, &pr, Some(area))?;
    report::emit_importance(&ctx.out, &importance)?;
    let metrics = json!({
        "auc": area,
        "rows": sl.len(),
        "positives": sl.labels.iter().filter(|&&l| l).count(),
        "gas_feature_importance": gas_share,
    });
    ctx.write("metrics.json", &(serde_json::to_string_pretty(&metrics).expect("json") + "\n"))?;
    println!("AUC {area:.4} on {} rows; gas features hold {:.1}% of importance", sl.len(), 100.0 * gas_share);
    Ok(())
}

fn parse_contracts(path: &Path) -> Result<Vec<(bool, Vec<u8>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("label,")) {
            continue;
        }
        let bad = |m: String| Error::Schema(format!("{} line {}: {m}", path.display(), i + 1));
        let (label, code) = line.split_once(',').ok_or_else(|| bad("expected label,bytecode".into()))?;
        let malicious = match label.trim() {
            "malicious" | "1" => true,
            "benign" | "0" => false,
            other => return Err(bad(format!("unknown label {other:?}"))),
        };
        rows.push((malicious, parse_hex_code(code).map_err(|e| bad(e.to_string()))?));
    }
    Ok(rows)
}

fn bayesnet(ctx: &Ctx, args: &BayesnetArgs) -> Result<()> {
    let rows = parse_contracts(&args.input)?;
    let max_len = ctx.cfg.normalize.max_len;
    // the same window the normalizer keeps: the last `max_len` instructions
    let seqs: Vec<(bool, OpcodeSequence)> = rows
        .iter()
        .map(|(m, code)| {
            let mut s = disassemble(code);
            let skip = s.instructions.len().saturating_sub(max_len);
            s.instructions.drain(..skip);
            (*m, s)
        })
        .collect();
    let top_k = args.top_k.unwrap_or(ctx.cfg.structure.top_k);
    let vocab = top_k_vocabulary(seqs.iter().map(|(_, s)| s), top_k);
    ctx.write("vocabulary.txt", &vocab.iter().map(|v| format!("{v}\n")).collect::<String>())?;
    let mut dags: Vec<Dag> = Vec::new();
    for (class, malicious) in [("benign", false), ("malicious", true)] {
        let class_seqs: Vec<&OpcodeSequence> = seqs.iter().filter(|(m, _)| *m == malicious).map(|(_, s)| s).collect();
        if class_seqs.is_empty() {
            return Err(Error::DegenerateLabels(format!("no {class} contracts in {}", args.input.display())));
        }
        let data = BinaryDataset::from_sequences(class_seqs, &vocab)?;
        let dag = learn_structure(&data, &ctx.cfg.structure);
        ctx.write(&format!("dag_{class}.dot"), &dag.to_dot())?;
        ctx.write(&format!("arcs_{class}.csv"), &dag.arcs_csv())?;
        println!("{class}: {} contracts, {} arcs", data.n_rows(), dag.arcs.len());
        dags.push(dag);
    }
    let diff = dag_diff(&dags[0], &dags[1])?;
    ctx.write("dag_diff.csv", &diff.to_csv())?;
    println!(
        "difference: {} only malicious, {} only benign, {} reversed",
        diff.added.len(),
        diff.removed.len(),
        diff.reversed.len()
    );
    Ok(())
}

/// Rows labeled benign, or every row when the dataset carries no labels.
fn benign_rows(ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    let any_label = ds.records.iter().any(|r| r.label.is_some());
    let rows: Vec<Vec<f64>> =
        ds.records.iter().filter(|r| !any_label || r.label == Some(false)).map(|r| r.values.clone()).collect();
    if rows.is_empty() {
        return Err(Error::DegenerateLabels("no benign rows to fit the autoencoder on".into()));
    }
    Ok(rows)
}

fn fit_autoencoder(ctx: &Ctx, ds: &Dataset) -> Result<AutoencoderModel> {
    let (model, rep) = ae_fit_with_report(&benign_rows(ds)?, &ctx.cfg.fit)?;
    let mut loss = String::from("round,loss\n");
    for (i, l) in rep.epoch_loss.iter().enumerate() {
        let _ = writeln!(loss, "{i},{l}");
    }
    ctx.write("ae_loss.csv", &loss)?;
    ctx.write("autoencoder.json", &model.to_json_string())?;
    println!(
        "autoencoder {:?}: loss {:.5} -> {:.5} (best epoch {})",
        model.layer_dims,
        rep.epoch_loss[0],
        rep.epoch_loss[rep.best_epoch],
        rep.best_epoch
    );
    Ok(model)
}

fn load_autoencoder(path: &Path) -> Result<AutoencoderModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AutoencoderModel::from_json_str(&text)
}

fn anomaly(ctx: &Ctx, cmd: &AnomalyCommand) -> Result<()> {
    match cmd {
        AnomalyCommand::Fit { dataset } => {
            fit_autoencoder(ctx, &load_dataset(&ctx.dataset(dataset))?)?;
        }
        AnomalyCommand::Score { model, dataset } => {
            let ae = load_autoencoder(&model.clone().unwrap_or_else(|| ctx.out("autoencoder.json")))?;
            let ds = load_dataset(&ctx.dataset(dataset))?;
            let scores = ds.records.iter().map(|r| ae.score(&r.values)).collect::<Result<Vec<f64>>>()?;
            let mut csv = String::from("tx_hash,label,score\n");
            for (r, s) in ds.records.iter().zip(&scores) {
                let _ = writeln!(csv, "{},{},{s}", r.id, r.label.map_or(String::new(), |l| u8::from(l).to_string()));
            }
            ctx.write("anomaly_scores.csv", &csv)?;
            let labeled = ds.records.iter().all(|r| r.label.is_some());
            match labeled.then(|| scored(scores.clone(), &ds)).transpose()? {
                Some(sl) if sl.class_counts().is_ok() => {
                    let roc = roc_curve(&sl)?;
                    let area = auc(&sl)?;
                    ctx.write("anomaly_roc.csv", &sentinel_core::metrics::roc_csv(&roc))?;
                    ctx.write("anomaly_roc.svg", &report::roc_svg(&roc, Some(area)))?;
                    println!("scored {} rows; anomaly AUC {area:.4}", ds.len());
                }
                _ => println!("scored {} rows", ds.len()),
            }
        }
        AnomalyCommand::Project { dataset, model, space, components } => {
            let ds = load_dataset(&ctx.dataset(dataset))?;
            if ds.is_empty() {
                return Err(Error::EmptyDataset);
            }
            let points: Vec<Vec<f64>> = match space {
                Space::Raw => {
                    let scaler = Standardizer::fit(&ds.matrix())?;
                    ds.records.iter().map(|r| scaler.transform(&r.values)).collect()
                }
                Space::Latent => {
                    let ae = match model {
                        Some(p) => load_autoencoder(p)?,
                        None => fit_autoencoder(ctx, &ds)?,
                    };
                    ds.records.iter().map(|r| ae.encode(&r.values)).collect::<Result<_>>()?
                }
            };
            let k = (*components).min(points[0].len());
            let pca = pca_fit(&points, k)?;
            let projected: Vec<(Option<bool>, Vec<f64>)> = ds
                .records
                .iter()
                .zip(&points)
                .map(|(r, p)| pca.project(p).map(|c| (r.label, c)))
                .collect::<Result<_>>()?;
            let space_name = match space {
                Space::Raw => "raw features",
                Space::Latent => "autoencoder latent space",
            };
            ctx.write("projection.csv", &projection_csv(&projected))?;
            ctx.write("projection.svg", &report::projection_svg(&projected, &format!("Transactions projected on PCA ({space_name})")))?;
            let ratio = pca.explained_ratio();
            ctx.write("pca.json", &(serde_json::to_string_pretty(&json!({ "space": space_name, "explained_ratio": ratio })).expect("json") + "\n"))?;
            println!("projected {} rows from {space_name}; explained variance ratio {:?}", ds.len(), ratio);
        }
    }
    Ok(())
}

fn read_importance(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let (name, v) = l.rsplit_once(',').ok_or_else(|| Error::Schema(format!("line {}: expected name,value", i + 2)))?;
            let v = v.parse().map_err(|e| Error::Schema(format!("line {}: {e}", i + 2)))?;
            Ok((name.to_string(), v))
        })
        .collect()
}

fn render(ctx: &Ctx, args: &ReportArgs) -> Result<()> {
    let path = &args.input;
    let first = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = first.lines().next().unwrap_or_default().to_string();
    let svg = match header.as_str() {
        "feature,importance" => report::importance_svg(&read_importance(path)?),
        "threshold,fpr,tpr" => {
            let (_, rows) = report::read_numeric_csv(path)?;
            let roc: Vec<RocPoint> = rows.iter().map(|r| RocPoint { threshold: r[0], fpr: r[1], tpr: r[2] }).collect();
            let area = roc.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
            report::roc_svg(&roc, Some(area))
        }
        "threshold,precision,recall" => {
            let (_, rows) = report::read_numeric_csv(path)?;
            let pr: Vec<PrPoint> = rows.iter().map(|r| PrPoint { threshold: r[0], precision: r[1], recall: r[2] }).collect();
            report::pr_svg(&pr)
        }
        "round,loss" => {
            let (_, rows) = report::read_numeric_csv(path)?;
            report::line_svg("Training loss", "Round", "Loss", &[("loss", rows.iter().map(|r| (r[0], r[1])).collect())], None)
        }
        h if h.starts_with("label,pc0") => {
            let (_, rows) = report::read_numeric_csv(path)?;
            let pts: Vec<(Option<bool>, Vec<f64>)> = rows
                .iter()
                .map(|r| {
                    let label = if r[0].is_nan() { None } else { Some(r[0] != 0.0) };
                    (label, r[1..].to_vec())
                })
                .collect();
            report::projection_svg(&pts, "Transactions projected on PCA")
        }
        other => {
            return Err(Error::Schema(format!(
                "{}: unrecognized CSV header {other:?}; expected roc, pr, importance, loss or projection output",
                path.display()
            )))
        }
    };
    let stem = path.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
    let written = ctx.write(&format!("{stem}.svg"), &svg)?;
    println!("wrote {}", written.display());
    Ok(())
}
