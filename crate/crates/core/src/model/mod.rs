// SPDX-License-Identifier: Apache-2.0

//! Gradient-boosted decision trees for binary classification.
//!
//! Trees are fitted to the gradient and hessian of the weighted logistic
//! loss with exact greedy split search. Positive (malicious) rows carry
//! `positive_class_weight`, which defaults to the negative/positive ratio.

mod io;
mod tree;

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{Dataset, FeatureVector};
use crate::{Error, Result};

pub use io::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use tree::TreeNode;
use tree::{presort, TreeBuilder, TreeParams};

/// Raw scores are clamped to this magnitude so probabilities stay inside (0, 1).
const MAX_MARGIN: f64 = 35.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub lambda_l2: f64,
    /// `None` means n_negative / n_positive of the training data.
    pub positive_class_weight: Option<f64>,
    pub rng_seed: u64,
    pub row_subsample: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 200,
            max_depth: 4,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            lambda_l2: 1.0,
            positive_class_weight: None,
            rng_seed: 0,
            row_subsample: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_trees == 0 {
            return bad("train.n_trees must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("train.learning_rate must be in (0, 1]");
        }
        if self.positive_class_weight.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
            return bad("train.positive_class_weight must be > 0");
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0) {
            return bad("train.row_subsample must be in (0, 1]");
        }
        if self.min_child_weight < 0.0 || self.lambda_l2 < 0.0 {
            return bad("train.min_child_weight and train.lambda_l2 must be >= 0");
        }
        Ok(())
    }
}

/// First and second derivative of the weighted logistic loss for one row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradPair {
    pub grad: f64,
    pub hess: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_MARGIN, MAX_MARGIN);
    1.0 / (1.0 + (-x).exp())
}

/// Per-row gradient pairs at the current raw scores.
pub fn gradients(labels: &[bool], raw: &[f64], weights: &[f64]) -> Vec<GradPair> {
    labels
        .iter()
        .zip(raw)
        .zip(weights)
        .map(|((&y, &f), &w)| {
            let p = sigmoid(f);
            let y = if y { 1.0 } else { 0.0 };
            GradPair { grad: w * (p - y), hess: w * p * (1.0 - p) }
        })
        .collect()
}

/// Weighted mean log-loss at the given raw scores.
pub fn weighted_log_loss(labels: &[bool], raw: &[f64], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut wsum = 0.0;
    for ((&y, &f), &w) in labels.iter().zip(raw).zip(weights) {
        let f = f.clamp(-MAX_MARGIN, MAX_MARGIN);
        // log(1 + e^{-f}) for positives, log(1 + e^{f}) for negatives
        let z = if y { -f } else { f };
        total += w * (z.max(0.0) + (-z.abs()).exp().ln_1p());
        wsum += w;
    }
    total / wsum
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub trees: Vec<TreeNode>,
    /// Prior log-odds.
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_schema: Vec<String>,
}

impl GbdtModel {
    /// A model with no trees; predicts `sigmoid(base_score)` everywhere.
    pub fn constant(base_score: f64, learning_rate: f64, feature_schema: Vec<String>) -> Self {
        GbdtModel { trees: Vec::new(), base_score, learning_rate, feature_schema }
    }

    /// Log-odds for a schema-aligned row.
    pub fn margin_dense(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_value(|f| row.get(f).copied())).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_dense(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin_dense(row))
    }

    /// Log-odds for a named vector; absent features take the default branch.
    pub fn margin(&self, fv: &FeatureVector) -> f64 {
        let sum: f64 = self
            .trees
            .iter()
            .map(|t| t.leaf_value(|f| fv.get(&self.feature_schema[f])))
            .sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_proba(&self, fv: &FeatureVector) -> f64 {
        sigmoid(self.margin(fv))
    }

    /// Scores every row of a dataset whose schema matches the model's.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.schema != self.feature_schema {
            return Err(Error::Schema("dataset schema differs from model schema".into()));
        }
        Ok(ds.records.iter().map(|r| self.predict_dense(&r.values)).collect())
    }

    /// Split gain per feature, normalized to sum to 1 over features that were split on.
    pub fn feature_importance(&self) -> BTreeMap<String, f64> {
        let mut gains = vec![0.0; self.feature_schema.len()];
        for t in &self.trees {
            t.for_each_split(&mut |f, g| gains[f] += g);
        }
        let total: f64 = gains.iter().sum();
        self.feature_schema
            .iter()
            .zip(gains)
            .map(|(name, g)| (name.clone(), if total > 0.0 { g / total } else { 0.0 }))
            .collect()
    }
}

pub fn predict_proba(model: &GbdtModel, fv: &FeatureVector) -> f64 {
    model.predict_proba(fv)
}

pub fn feature_importance(model: &GbdtModel) -> BTreeMap<String, f64> {
    model.feature_importance()
}

/// What training did, round by round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Weighted log-loss before the first tree, then after each tree.
    pub loss: Vec<f64>,
    /// Rounds where the tree's step had to be halved to keep the loss from rising.
    pub damped_rounds: Vec<usize>,
    pub positive_class_weight: f64,
}

pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<GbdtModel> {
    train_with_report(data, cfg).map(|(m, _)| m)
}

pub fn train_with_report(data: &Dataset, cfg: &TrainConfig) -> Result<(GbdtModel, TrainReport)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::DegenerateLabels(format!("{} rows; need at least 2", data.len())));
    }
    let labels = data.labels()?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels(format!("{n_pos} malicious and {n_neg} benign rows")));
    }
    let n_features = data.schema.len();
    if let Some(r) = data.records.iter().find(|r| r.values.len() != n_features) {
        return Err(Error::Schema(format!("row {} has {} values for {n_features} features", r.id, r.values.len())));
    }
    if let Some(r) = data.records.iter().find(|r| r.values.iter().any(|v| !v.is_finite())) {
        return Err(Error::Schema(format!("row {} has a non-finite value", r.id)));
    }

    let pos_weight = cfg.positive_class_weight.unwrap_or(n_neg as f64 / n_pos as f64);
    let weights: Vec<f64> = labels.iter().map(|&y| if y { pos_weight } else { 1.0 }).collect();
    let base_score = (pos_weight * n_pos as f64 / n_neg as f64).ln();

    let columns: Vec<Vec<f64>> =
        (0..n_features).map(|f| data.records.iter().map(|r| r.values[f]).collect()).collect();
    let sorted = presort(&columns);
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_child_weight: cfg.min_child_weight,
        lambda: cfg.lambda_l2,
    };
    let builder = TreeBuilder::new(&columns, &sorted, &params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = labels.len();
    let sample_size = ((n as f64 * cfg.row_subsample).round() as usize).clamp(1, n);

    let mut raw = vec![base_score; n];
    let mut report = TrainReport {
        loss: vec![weighted_log_loss(&labels, &raw, &weights)],
        damped_rounds: Vec::new(),
        positive_class_weight: pos_weight,
    };
    let mut trees = Vec::with_capacity(cfg.n_trees);

    for round in 0..cfg.n_trees {
        let grads = gradients(&labels, &raw, &weights);
        let mut active = vec![sample_size == n; n];
        if sample_size < n {
            for i in index::sample(&mut rng, n, sample_size) {
                active[i] = true;
            }
        }
        let mut tree = builder.build(&grads, &active);
        let prev = *report.loss.last().expect("initial loss");
        let deltas: Vec<f64> = (0..n).map(|i| tree.leaf_value(|f| Some(columns[f][i]))).collect();

        // Backtrack on the step size if a Newton step overshoots.
        let mut factor = 1.0;
        let mut loss;
        let mut candidate = vec![0.0; n];
        loop {
            for i in 0..n {
                candidate[i] = raw[i] + cfg.learning_rate * factor * deltas[i];
            }
            loss = weighted_log_loss(&labels, &candidate, &weights);
            if loss <= prev || factor < 1e-6 {
                break;
            }
            factor /= 2.0;
        }
        if loss > prev {
            factor = 0.0;
            loss = prev;
            candidate.copy_from_slice(&raw);
        }
        if factor != 1.0 {
            tree.scale_leaves(factor);
            report.damped_rounds.push(round);
        }
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("non-finite training loss at round {round}")));
        }
        raw = candidate;
        report.loss.push(loss);
        trees.push(tree);
    }

    let model = GbdtModel {
        trees,
        base_score,
        learning_rate: cfg.learning_rate,
        feature_schema: data.schema.clone(),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Record;

    pub(crate) fn dataset(schema: &[&str], rows: &[(Vec<f64>, bool)]) -> Dataset {
        Dataset {
            schema: schema.iter().map(|s| s.to_string()).collect(),
            records: rows
                .iter()
                .enumerate()
                .map(|(i, (v, y))| Record { id: format!("r{i}"), values: v.clone(), label: Some(*y) })
                .collect(),
        }
    }

    fn separable() -> Dataset {
        let rows: Vec<_> = (0..100).map(|i| (vec![i as f64 - 49.5], i >= 50)).collect();
        dataset(&["x"], &rows)
    }

    #[test]
    fn rejects_single_class() {
        let ds = dataset(&["x"], &[(vec![1.0], false), (vec![2.0], false)]);
        assert!(matches!(train(&ds, &TrainConfig::default()), Err(Error::DegenerateLabels(_))));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TrainConfig { n_trees: 0, ..Default::default() };
        assert!(matches!(train(&separable(), &cfg), Err(Error::InvalidConfig(_))));
        let cfg = TrainConfig { learning_rate: 1.5, ..Default::default() };
        assert!(matches!(train(&separable(), &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn separable_fixture() {
        let ds = separable();
        let cfg = TrainConfig { n_trees: 5, ..Default::default() };
        let (model, report) = train_with_report(&ds, &cfg).unwrap();
        assert!(model.trees.iter().all(|t| t.depth() <= cfg.max_depth));
        assert!(report.loss.windows(2).all(|w| w[1] <= w[0]));
        let imp = model.feature_importance();
        assert_eq!(imp["x"], 1.0);
        let mut fv = FeatureVector::default();
        fv.values.insert("x".into(), 5.0);
        let trained = TrainConfig { n_trees: 50, ..TrainConfig::default() };
        let strong = train(&ds, &trained).unwrap();
        assert!(strong.predict_proba(&fv) > 0.9, "{}", strong.predict_proba(&fv));
    }

    #[test]
    fn constant_feature_predicts_base_rate() {
        let rows: Vec<_> = (0..20).map(|i| (vec![3.0], i % 4 == 0)).collect();
        let ds = dataset(&["c"], &rows);
        let cfg = TrainConfig { n_trees: 10, positive_class_weight: Some(1.0), ..Default::default() };
        let model = train(&ds, &cfg).unwrap();
        assert!(model.trees.iter().all(TreeNode::is_leaf));
        let p = model.predict_dense(&[3.0]);
        assert!((p - 0.25).abs() < 1e-12, "{p}");
        assert!(model.feature_importance().values().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_and_leaf_models() {
        let empty = GbdtModel::constant(0.0, 0.1, vec!["x".into()]);
        assert_eq!(empty.predict_proba(&FeatureVector::default()), 0.5);
        let leaf = GbdtModel {
            trees: vec![TreeNode::Leaf { weight: 0.7 }],
            base_score: 0.0,
            learning_rate: 1.0,
            feature_schema: vec!["x".into()],
        };
        assert_eq!(leaf.predict_dense(&[0.0]), sigmoid(0.7));
        assert!(leaf.feature_importance().values().all(|&v| v == 0.0));
    }

    #[test]
    fn probabilities_stay_open() {
        let m = GbdtModel::constant(1e6, 1.0, vec![]);
        let p = m.predict_dense(&[]);
        assert!(p > 0.0 && p < 1.0);
        let m = GbdtModel::constant(-1e6, 1.0, vec![]);
        let p = m.predict_dense(&[]);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn subsampling_is_seeded() {
        let cfg = TrainConfig { n_trees: 20, row_subsample: 0.5, rng_seed: 9, ..Default::default() };
        let a = train(&separable(), &cfg).unwrap();
        let b = train(&separable(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shifted_feature_keeps_training_predictions() {
        let rows: Vec<_> = (0..60)
            .map(|i| (vec![(i % 7) as f64, ((i * 13) % 11) as f64], (i % 7) + (i * 13) % 11 > 8))
            .collect();
        let ds = dataset(&["a", "b"], &rows);
        let mut shifted = ds.clone();
        for r in &mut shifted.records {
            r.values[1] += 1000.0;
        }
        let cfg = TrainConfig { n_trees: 15, ..Default::default() };
        let m1 = train(&ds, &cfg).unwrap();
        let m2 = train(&shifted, &cfg).unwrap();
        for (r1, r2) in ds.records.iter().zip(&shifted.records) {
            assert_eq!(m1.predict_dense(&r1.values), m2.predict_dense(&r2.values));
        }
    }

    #[test]
    fn weight_equals_duplication() {
        let labels = [true, false, false, true, false, false, false, true, false, false];
        let raw: Vec<f64> = (0..10).map(|i| (i as f64 - 4.5) / 3.0).collect();
        let k = 3.0;
        let weighted = gradients(&labels, &raw, &labels.map(|y| if y { k } else { 1.0 }));
        let (mut dl, mut dr) = (Vec::new(), Vec::new());
        for (&y, &f) in labels.iter().zip(&raw) {
            for _ in 0..if y { 3 } else { 1 } {
                dl.push(y);
                dr.push(f);
            }
        }
        let dup = gradients(&dl, &dr, &vec![1.0; dl.len()]);
        let sum = |v: &[GradPair]| v.iter().fold((0.0, 0.0), |(g, h), p| (g + p.grad, h + p.hess));
        let (a, b) = (sum(&weighted), sum(&dup));
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12, "{a:?} vs {b:?}");
    }
}
