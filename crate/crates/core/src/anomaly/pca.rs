// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Principal components of a centered data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Sum of per-feature sample variances of the training data.
    pub total_variance: f64,
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let d = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
        return Err(Error::Dimension(format!("row {i} has {} columns, expected {d}", r.len())));
    }
    Ok(d)
}

/// Fits the top-`k` components from the SVD of the centered data.
///
/// Each component is sign-normalized so its largest-magnitude entry is positive.
pub fn pca_fit(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let d = check_rows(rows)?;
    if k > d {
        return Err(Error::Dimension(format!("k = {k} exceeds dimension {d}")));
    }
    let n = rows.len();
    if n < 2 {
        return Err(Error::Dimension("PCA needs at least 2 rows".into()));
    }
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    // Zero rows pad short-and-wide data so the SVD yields all d right singular vectors.
    let m = n.max(d);
    let centered = DMatrix::from_fn(m, d, |i, j| if i < n { rows[i][j] - mean[j] } else { 0.0 });
    let total_variance = centered.iter().map(|x| x * x).sum::<f64>() / (n - 1) as f64;

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut row: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = row.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(row);
        let s = svd.singular_values[idx];
        explained_variance.push(s * s / (n - 1) as f64);
    }
    Ok(PcaModel { mean, components, explained_variance, total_variance })
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Dimension(format!("row has {} columns, model expects {}", row.len(), self.dim())));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect())
    }

    /// Maps component coordinates back to (uncentered) feature space.
    pub fn inverse(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.n_components() {
            return Err(Error::Dimension(format!(
                "{} coordinates for {} components",
                coords.len(),
                self.n_components()
            )));
        }
        let mut out = self.mean.clone();
        for (c, &z) in self.components.iter().zip(coords) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += z * w;
            }
        }
        Ok(out)
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| if self.total_variance > 0.0 { v / self.total_variance } else { 0.0 })
            .collect()
    }
}

pub fn pca_project(model: &PcaModel, row: &[f64]) -> Result<Vec<f64>> {
    model.project(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Vec<Vec<f64>> {
        (0..20).map(|i| vec![i as f64 * 0.5 - 3.0, 2.0 * (i as f64 * 0.5 - 3.0)]).collect()
    }

    #[test]
    fn rank_one_data() {
        let m = pca_fit(&line(), 1).unwrap();
        assert!(m.explained_ratio()[0] >= 1.0 - 1e-8);
        let c = &m.components[0];
        assert!((c[0] - 1.0 / 5f64.sqrt()).abs() < 1e-10 && (c[1] - 2.0 / 5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn projection_oracle() {
        let rows = vec![vec![1.0, 0.0, 2.0], vec![3.0, 1.0, 0.0], vec![0.0, 2.0, 1.0], vec![2.0, 5.0, 1.0]];
        let m = pca_fit(&rows, 2).unwrap();
        assert_eq!(m.project(&m.mean).unwrap(), vec![0.0, 0.0]);
        let p = [4.0, -1.0, 3.0];
        let got = m.project(&p).unwrap();
        for (k, comp) in m.components.iter().enumerate() {
            let mut hand = 0.0;
            for j in 0..3 {
                hand += (p[j] - m.mean[j]) * comp[j];
            }
            assert!((got[k] - hand).abs() < 1e-12);
        }
        let shifted: Vec<f64> = m.components[0].iter().zip(&m.mean).map(|(c, mu)| c + mu).collect();
        let e0 = m.project(&shifted).unwrap();
        assert!((e0[0] - 1.0).abs() < 1e-12 && e0[1].abs() < 1e-12);
    }

    #[test]
    fn wide_data_gets_full_basis() {
        let rows = vec![vec![1.0, 2.0, 0.0, 4.0], vec![0.0, 1.0, 3.0, 1.0], vec![2.0, 2.0, 2.0, 2.0]];
        let m = pca_fit(&rows, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = m.components[a].iter().zip(&m.components[b]).map(|(x, y)| x * y).sum();
                assert!((dot - f64::from(u8::from(a == b))).abs() < 1e-8);
            }
        }
        for r in &rows {
            let back = m.inverse(&m.project(r).unwrap()).unwrap();
            assert!(back.iter().zip(r).all(|(x, y)| (x - y).abs() < 1e-8));
        }
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(pca_fit(&line(), 3), Err(Error::Dimension(_))));
        let m = pca_fit(&line(), 2).unwrap();
        assert!(matches!(m.project(&[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(pca_fit(&[vec![1.0]], 1), Err(Error::Dimension(_))));
    }
}
