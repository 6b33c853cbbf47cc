// SPDX-License-Identifier: Apache-2.0

//! ROC / AUC and precision-recall evaluation for binary scores.
//!
//! Conventions: tied scores collapse to one ROC point, which makes the
//! trapezoidal area equal to the Mann-Whitney statistic with ties counted
//! one half. Precision with no predicted positives is 1.0. A row is predicted
//! positive when `score >= threshold`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::{Error, Result};

/// Scores paired with binary labels (`true` = positive / malicious).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoredLabels {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension(format!("{} scores vs {} labels", scores.len(), labels.len())));
        }
        if scores.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(s) = scores.iter().find(|s| s.is_nan()) {
            return Err(Error::Schema(format!("score {s} is not a number")));
        }
        Ok(ScoredLabels { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `(positives, negatives)`; fails unless both are present.
    pub fn class_counts(&self) -> Result<(usize, usize)> {
        let pos = self.labels.iter().filter(|&&l| l).count();
        let neg = self.labels.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(Error::DegenerateLabels(format!("{pos} positives and {neg} negatives")));
        }
        Ok((pos, neg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive; the origin uses +inf.
    pub threshold: f64,
}

/// ROC curve from (0,0) to (1,1), thresholds descending.
pub fn roc_curve(sl: &ScoredLabels) -> Result<Vec<RocPoint>> {
    let (pos, neg) = sl.class_counts()?;
    let mut order: Vec<usize> = (0..sl.len()).collect();
    order.sort_by(|&a, &b| sl.scores[b].partial_cmp(&sl.scores[a]).unwrap_or(Ordering::Equal));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = sl.scores[order[i]];
        while i < order.len() && sl.scores[order[i]] == threshold {
            if sl.labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64, threshold });
    }
    Ok(points)
}

/// Trapezoidal area under the ROC curve.
pub fn auc(sl: &ScoredLabels) -> Result<f64> {
    let curve = roc_curve(sl)?;
    Ok(curve.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn at(sl: &ScoredLabels, threshold: f64) -> Self {
        let mut m = ConfusionMatrix::default();
        for (&s, &l) in sl.scores.iter().zip(&sl.labels) {
            match (s >= threshold, l) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, false) => m.tn += 1,
                (false, true) => m.fn_ += 1,
            }
        }
        m
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let p = self.tp + self.fn_;
        if p == 0 {
            0.0
        } else {
            self.tp as f64 / p as f64
        }
    }

    pub fn false_positive_rate(&self) -> f64 {
        let n = self.fp + self.tn;
        if n == 0 {
            0.0
        } else {
            self.fp as f64 / n as f64
        }
    }
}

/// Precision and recall at each requested threshold, in the given order.
pub fn precision_recall(sl: &ScoredLabels, thresholds: &[f64]) -> Result<Vec<PrPoint>> {
    sl.class_counts()?;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let m = ConfusionMatrix::at(sl, t);
            PrPoint { precision: m.precision(), recall: m.recall(), threshold: t }
        })
        .collect())
}

/// Distinct scores in descending order, for sweeping every operating point.
pub fn distinct_thresholds(sl: &ScoredLabels) -> Vec<f64> {
    let mut t = sl.scores.clone();
    t.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    t.dedup();
    t
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}

pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut out = String::from("threshold,precision,recall\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.precision, p.recall));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sl(scores: &[f64], labels: &[u8]) -> ScoredLabels {
        ScoredLabels::new(scores.to_vec(), labels.iter().map(|&l| l == 1).collect()).unwrap()
    }

    /// Mann-Whitney over all (positive, negative) pairs, ties = 1/2.
    fn pairwise(s: &ScoredLabels) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in s.labels.iter().enumerate() {
            for (j, &lj) in s.labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    if s.scores[i] > s.scores[j] {
                        wins += 1.0;
                    } else if s.scores[i] == s.scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_ranking() {
        let s = sl(&[0.9, 0.1], &[1, 0]);
        let curve = roc_curve(&s).unwrap();
        assert!(curve.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(auc(&s).unwrap(), 1.0);
    }

    #[test]
    fn all_tied_is_diagonal() {
        let s = sl(&[0.3; 6], &[1, 0, 1, 0, 0, 1]);
        let curve = roc_curve(&s).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!((curve[1].fpr, curve[1].tpr), (1.0, 1.0));
        assert_eq!(auc(&s).unwrap(), 0.5);
    }

    #[test]
    fn three_of_four_pairs() {
        let s = sl(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]);
        assert_eq!(pairwise(&s), 0.75);
        assert!((auc(&s).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn curve_endpoints_and_order() {
        let s = sl(&[0.2, 0.7, 0.7, 0.1, 0.5], &[0, 1, 0, 1, 1]);
        let c = roc_curve(&s).unwrap();
        assert_eq!((c[0].fpr, c[0].tpr), (0.0, 0.0));
        assert_eq!((c.last().unwrap().fpr, c.last().unwrap().tpr), (1.0, 1.0));
        assert!(c.windows(2).all(|w| w[0].threshold > w[1].threshold));
    }

    #[test]
    fn single_class_rejected() {
        let s = sl(&[0.1, 0.2], &[1, 1]);
        assert!(matches!(roc_curve(&s), Err(Error::DegenerateLabels(_))));
        assert!(matches!(auc(&s), Err(Error::DegenerateLabels(_))));
        assert!(matches!(precision_recall(&s, &[0.5]), Err(Error::DegenerateLabels(_))));
    }

    #[test]
    fn pr_examples() {
        let perfect = sl(&[0.9, 0.8, 0.1], &[1, 1, 0]);
        let p = precision_recall(&perfect, &[0.5, 2.0]).unwrap();
        assert_eq!((p[0].precision, p[0].recall), (1.0, 1.0));
        assert_eq!((p[1].precision, p[1].recall), (1.0, 0.0));
        let mixed = sl(&[0.9, 0.6, 0.4], &[1, 0, 1]);
        let p = precision_recall(&mixed, &[0.5]).unwrap();
        assert_eq!((p[0].precision, p[0].recall), (0.5, 0.5));
    }

    #[test]
    fn csv_headers() {
        let s = sl(&[0.9, 0.1], &[1, 0]);
        let roc = roc_csv(&roc_curve(&s).unwrap());
        assert!(roc.starts_with("threshold,fpr,tpr\ninf,0,0\n"));
        assert!(pr_csv(&[]).starts_with("threshold,precision,recall\n"));
    }

    fn arb_fixture() -> impl Strategy<Value = ScoredLabels> {
        (2usize..80)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0u8..12, n),
                    proptest::collection::vec(any::<bool>(), n),
                )
            })
            .prop_filter("both classes", |(_, l)| l.iter().any(|&x| x) && l.iter().any(|&x| !x))
            .prop_map(|(s, l)| ScoredLabels::new(s.into_iter().map(|v| v as f64 / 11.0).collect(), l).unwrap())
    }

    proptest! {
        #[test]
        fn trapezoid_equals_pairwise(s in arb_fixture()) {
            prop_assert!((auc(&s).unwrap() - pairwise(&s)).abs() < 1e-12);
        }

        #[test]
        fn flipped_labels_complement(s in arb_fixture()) {
            let flipped = ScoredLabels::new(s.scores.clone(), s.labels.iter().map(|l| !l).collect()).unwrap();
            prop_assert!((auc(&s).unwrap() + auc(&flipped).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_transform_invariance(s in arb_fixture()) {
            let t = ScoredLabels::new(s.scores.iter().map(|x| (3.0 * x).exp() - 7.0).collect(), s.labels.clone()).unwrap();
            prop_assert!((auc(&s).unwrap() - auc(&t).unwrap()).abs() < 1e-12);
        }
    }
}
