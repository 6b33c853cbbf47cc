// SPDX-License-Identifier: Apache-2.0

//! Benign-only anomaly scoring and PCA projection.

mod autoencoder;
mod pca;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use autoencoder::{
    ae_fit, ae_fit_with_report, ae_score, AutoencoderModel, FitConfig, FitReport, AE_FORMAT_VERSION,
};
pub use pca::{pca_fit, pca_project, PcaModel};

/// Per-feature z-scoring fitted on the reference (benign) rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Zero-variance features get a scale of 1.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(d: usize) -> Self {
        Standardizer { mean: vec![0.0; d], scale: vec![1.0; d] }
    }

    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }
}

/// PCA export rows as `label,pc0,pc1,...` CSV.
pub fn projection_csv(points: &[(Option<bool>, Vec<f64>)]) -> String {
    let k = points.first().map_or(0, |(_, p)| p.len());
    let mut out = String::from("label");
    for i in 0..k {
        out.push_str(&format!(",pc{i}"));
    }
    out.push('\n');
    for (label, coords) in points {
        out.push_str(match label {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        });
        for c in coords {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}
