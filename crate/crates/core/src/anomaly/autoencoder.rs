// SPDX-License-Identifier: Apache-2.0

//! A small fully-connected autoencoder trained on benign rows only.
//!
//! Hidden layers use tanh, the output layer is linear, and the anomaly score
//! of a row is its mean squared reconstruction error in standardized space.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::{Error, Result};

pub const AE_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
    /// z-score each feature with statistics of the training rows.
    pub standardize: bool,
    /// Overrides the default hidden width `max(2, d/2)`.
    pub hidden: Option<usize>,
    /// Overrides the default bottleneck width `max(1, d/4)`.
    pub latent: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            rng_seed: 0,
            standardize: true,
            hidden: None,
            latent: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("fit.epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("fit.batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("fit.learning_rate must be > 0".into()));
        }
        Ok(())
    }

    /// `[d, h, z, h, d]` for input width `d`.
    pub fn layer_dims(&self, d: usize) -> Vec<usize> {
        let h = self.hidden.unwrap_or((d / 2).max(2));
        let z = self.latent.unwrap_or((d / 4).max(1));
        vec![d, h, z, h, d]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub layer_dims: Vec<usize>,
    pub activation: String,
    /// Per layer: the `out x in` weight matrix row-major, then `out` biases.
    pub params: Vec<f64>,
    pub scaler: Standardizer,
}

/// Offsets of one layer's weights and biases inside the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct LayerSlots {
    n_in: usize,
    n_out: usize,
    w: usize,
    b: usize,
}

fn layer_slots(dims: &[usize]) -> Vec<LayerSlots> {
    let mut off = 0;
    dims.windows(2)
        .map(|w| {
            let (n_in, n_out) = (w[0], w[1]);
            let s = LayerSlots { n_in, n_out, w: off, b: off + n_in * n_out };
            off += n_in * n_out + n_out;
            s
        })
        .collect()
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl AutoencoderModel {
    /// Xavier-uniform weights, zero biases.
    pub fn init(layer_dims: Vec<usize>, scaler: Standardizer, seed: u64) -> Result<Self> {
        let d = layer_dims.first().copied().unwrap_or(0);
        if layer_dims.len() < 3 || layer_dims.last() != Some(&d) || layer_dims.contains(&0) {
            return Err(Error::Dimension(format!("bad layer dims {layer_dims:?}")));
        }
        if scaler.dim() != d {
            return Err(Error::Dimension(format!("scaler width {} vs input {d}", scaler.dim())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; param_count(&layer_dims)];
        for s in layer_slots(&layer_dims) {
            let limit = (6.0 / (s.n_in + s.n_out) as f64).sqrt();
            for p in &mut params[s.w..s.b] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Ok(AutoencoderModel { layer_dims, activation: "tanh".into(), params, scaler })
    }

    pub fn dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Activations of every layer, input first; `x` is already standardized.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let slots = layer_slots(&self.layer_dims);
        let last = slots.len() - 1;
        let mut acts = vec![x.to_vec()];
        for (l, s) in slots.iter().enumerate() {
            let input = &acts[l];
            let out: Vec<f64> = (0..s.n_out)
                .map(|o| {
                    let row = &self.params[s.w + o * s.n_in..s.w + (o + 1) * s.n_in];
                    let z = self.params[s.b + o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    /// Mean squared error over `rows` (standardized) and its gradient w.r.t. `params`.
    pub fn loss_and_gradient(&self, rows: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let slots = layer_slots(&self.layer_dims);
        let last = slots.len() - 1;
        let d = self.dim() as f64;
        let scale = 1.0 / (rows.len() as f64 * d);
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for x in rows {
            let acts = self.forward(x);
            let out = &acts[acts.len() - 1];
            let mut delta: Vec<f64> = out.iter().zip(x).map(|(y, t)| y - t).collect();
            loss += delta.iter().map(|e| e * e).sum::<f64>();
            for e in &mut delta {
                *e *= 2.0 * scale;
            }
            for l in (0..=last).rev() {
                let s = slots[l];
                let input = &acts[l];
                for o in 0..s.n_out {
                    grad[s.b + o] += delta[o];
                    let row = &mut grad[s.w + o * s.n_in..s.w + (o + 1) * s.n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += delta[o] * a;
                    }
                }
                if l == 0 {
                    break;
                }
                // input[i] = tanh(.) for hidden layers, derivative 1 - input^2
                delta = (0..s.n_in)
                    .map(|i| {
                        let back: f64 = (0..s.n_out).map(|o| self.params[s.w + o * s.n_in + i] * delta[o]).sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
        (loss * scale, grad)
    }

    pub fn reconstruct_standardized(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().expect("output layer")
    }

    fn check_dim(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::Dimension(format!("row has {} columns, model expects {}", row.len(), self.dim())));
        }
        Ok(())
    }

    /// Mean squared reconstruction error of a raw row.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        self.check_dim(row)?;
        let x = self.scaler.transform(row);
        let y = self.reconstruct_standardized(&x);
        Ok(x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
    }

    /// Bottleneck activations of a raw row.
    pub fn encode(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(row)?;
        let acts = self.forward(&self.scaler.transform(row));
        let bottleneck = (0..self.layer_dims.len())
            .min_by_key(|&i| (self.layer_dims[i], i.abs_diff(self.layer_dims.len() / 2)))
            .expect("nonempty dims");
        Ok(acts[bottleneck].clone())
    }

    pub fn to_json_string(&self) -> String {
        let v = serde_json::json!({ "version": AE_FORMAT_VERSION, "model": self });
        serde_json::to_string(&v).expect("autoencoder serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if v.get("version").and_then(|x| x.as_u64()) != Some(AE_FORMAT_VERSION) {
            return Err(Error::ModelFormat(format!("expected autoencoder format version {AE_FORMAT_VERSION}")));
        }
        let model: AutoencoderModel = serde_json::from_value(v["model"].clone())
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        if model.params.len() != param_count(&model.layer_dims) || model.scaler.dim() != model.dim() {
            return Err(Error::ModelFormat("parameter count does not match layer dims".into()));
        }
        Ok(model)
    }
}

pub fn ae_score(model: &AutoencoderModel, row: &[f64]) -> Result<f64> {
    model.score(row)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    /// Full-data loss before training, then after each epoch.
    pub epoch_loss: Vec<f64>,
    /// Index into `epoch_loss` of the returned parameters.
    pub best_epoch: usize,
}

pub fn ae_fit(rows: &[Vec<f64>], cfg: &FitConfig) -> Result<AutoencoderModel> {
    ae_fit_with_report(rows, cfg).map(|(m, _)| m)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains with shuffled mini-batches and Adam updates.
///
/// Returns the parameters from the epoch with the lowest full-data loss, so
/// the final loss never exceeds the initial one.
pub fn ae_fit_with_report(rows: &[Vec<f64>], cfg: &FitConfig) -> Result<(AutoencoderModel, FitReport)> {
    cfg.validate()?;
    let d = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
    if d < 2 {
        return Err(Error::Dimension(format!("autoencoder needs at least 2 features, got {d}")));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension(format!("row with {} columns, expected {d}", r.len())));
    }
    let scaler = if cfg.standardize { Standardizer::fit(rows)? } else { Standardizer::identity(d) };
    let data: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect();
    let mut model = AutoencoderModel::init(cfg.layer_dims(d), scaler, cfg.rng_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(1));
    let mut adam = Adam { m: vec![0.0; model.params.len()], v: vec![0.0; model.params.len()], t: 0 };

    let initial = model.loss_and_gradient(&data).0;
    if !initial.is_finite() {
        return Err(Error::Divergence("initial loss is not finite; check the input scale".into()));
    }
    let mut report = FitReport { epoch_loss: vec![initial], best_epoch: 0 };
    let mut best = model.params.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let rows: Vec<Vec<f64>> = batch.iter().map(|&i| data[i].clone()).collect();
            let (_, grad) = model.loss_and_gradient(&rows);
            adam.step(&mut model.params, &grad, cfg.learning_rate);
        }
        let loss = model.loss_and_gradient(&data).0;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!(
                "loss became non-finite at epoch {epoch}; lower fit.learning_rate"
            )));
        }
        if loss < report.epoch_loss[report.best_epoch] {
            report.best_epoch = epoch;
            best.copy_from_slice(&model.params);
        }
        report.epoch_loss.push(loss);
    }
    model.params = best;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    #![allow(clippy::needless_range_loop)]
    use super::*;

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut model =
            AutoencoderModel::init(vec![5, 4, 2, 4, 5], Standardizer::identity(5), 11).unwrap();
        for (i, p) in model.params.iter_mut().enumerate() {
            *p += 0.01 * (i as f64).sin();
        }
        let rows = random_rows(8, 5, 3);
        let (_, analytic) = model.loss_and_gradient(&rows);
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..model.params.len() {
            let orig = model.params[i];
            model.params[i] = orig + eps;
            let up = model.loss_and_gradient(&rows).0;
            model.params[i] = orig - eps;
            let down = model.loss_and_gradient(&rows).0;
            model.params[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn constant_row_is_learned() {
        let rows = vec![vec![0.5, -0.3, 0.8, 0.1]; 16];
        let cfg = FitConfig { epochs: 1500, learning_rate: 1e-2, standardize: false, latent: Some(1), ..Default::default() };
        let (model, report) = ae_fit_with_report(&rows, &cfg).unwrap();
        assert!(report.epoch_loss[report.best_epoch] < 1e-6, "{}", report.epoch_loss[report.best_epoch]);
        assert!(model.score(&rows[0]).unwrap() < 1e-6);
    }

    #[test]
    fn config_and_dimension_errors() {
        let rows = random_rows(10, 4, 1);
        assert!(matches!(ae_fit(&rows, &FitConfig { epochs: 0, ..Default::default() }), Err(Error::InvalidConfig(_))));
        assert!(matches!(ae_fit(&random_rows(10, 1, 1), &FitConfig::default()), Err(Error::Dimension(_))));
        let model = ae_fit(&rows, &FitConfig { epochs: 2, ..Default::default() }).unwrap();
        assert!(matches!(model.score(&[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1e200 * i as f64, -1e200, 3e200]).collect();
        let cfg = FitConfig { standardize: false, epochs: 3, ..Default::default() };
        assert!(matches!(ae_fit(&rows, &cfg), Err(Error::Divergence(_))));
    }

    #[test]
    fn default_architecture() {
        assert_eq!(FitConfig::default().layer_dims(22), vec![22, 11, 5, 11, 22]);
        assert_eq!(FitConfig::default().layer_dims(2), vec![2, 2, 1, 2, 2]);
    }

    #[test]
    fn seeded_and_persistable() {
        let rows = random_rows(40, 6, 2);
        let cfg = FitConfig { epochs: 20, ..Default::default() };
        let a = ae_fit(&rows, &cfg).unwrap();
        let b = ae_fit(&rows, &cfg).unwrap();
        assert_eq!(a, b);
        let back = AutoencoderModel::from_json_str(&a.to_json_string()).unwrap();
        assert_eq!(back, a);
        for r in &rows {
            assert_eq!(a.score(r).unwrap(), back.score(r).unwrap());
            assert!(a.score(r).unwrap() >= 0.0);
        }
        assert_eq!(a.encode(&rows[0]).unwrap().len(), 1);
    }

    #[test]
    fn epoch_losses_do_not_rise_on_standardized_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let t: f64 = rng.random_range(-1.0..1.0);
                vec![t, 2.0 * t + 0.05 * rng.random_range(-1.0..1.0), -t, rng.random_range(-1.0..1.0)]
            })
            .collect();
        let (_, report) = ae_fit_with_report(&rows, &FitConfig { epochs: 60, ..Default::default() }).unwrap();
        assert!(report.epoch_loss.windows(2).all(|w| w[1] <= w[0]), "{:?}", report.epoch_loss);
    }
}
