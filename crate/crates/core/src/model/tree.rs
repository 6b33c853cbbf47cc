// SPDX-License-Identifier: Apache-2.0

//! Regression trees fitted to second-order gradient statistics.

use super::GradPair;

/// Gains at or below this are treated as "no split".
const MIN_SPLIT_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        /// Index into the model's feature schema.
        feature: usize,
        /// Rows with `value < threshold` go left.
        threshold: f64,
        /// Branch taken when the feature is missing.
        default_left: bool,
        /// Loss reduction credited to this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
    },
}

impl TreeNode {
    /// Leaf weight reached by `lookup`, which returns `None` for a missing feature.
    pub fn leaf_value(&self, lookup: impl Fn(usize) -> Option<f64>) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split { feature, threshold, default_left, left, right, .. } => {
                    let go_left = match lookup(*feature) {
                        Some(v) if !v.is_nan() => v < *threshold,
                        _ => *default_left,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Visits every split as `(feature, gain)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split { feature, gain, left, right, .. } = self {
            f(*feature, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        match self {
            TreeNode::Leaf { weight } => *weight *= factor,
            TreeNode::Split { left, right, .. } => {
                left.scale_leaves(factor);
                right.scale_leaves(factor);
            }
        }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Exact greedy learner over columns presorted once per training run.
pub(crate) struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    /// Row indices of each column in ascending value order.
    sorted: &'a [Vec<usize>],
    params: &'a TreeParams,
}

pub(crate) fn presort(columns: &[Vec<f64>]) -> Vec<Vec<usize>> {
    columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..col.len()).collect();
            idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

impl<'a> TreeBuilder<'a> {
    pub fn new(columns: &'a [Vec<f64>], sorted: &'a [Vec<usize>], params: &'a TreeParams) -> Self {
        TreeBuilder { columns, sorted, params }
    }

    /// Grows one tree over the rows flagged in `active` (others carry no gradient).
    pub fn build(&self, grads: &[GradPair], active: &[bool]) -> TreeNode {
        let mut member = active.to_vec();
        let rows: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
        self.grow(grads, &rows, &mut member, 0)
    }

    fn grow(&self, grads: &[GradPair], rows: &[usize], member: &mut [bool], depth: usize) -> TreeNode {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &i| (g + grads[i].grad, h + grads[i].hess));
        let leaf = TreeNode::Leaf { weight: leaf_weight(g, h, self.params.lambda) };
        if depth >= self.params.max_depth || rows.len() < 2 {
            return leaf;
        }
        for &i in rows {
            member[i] = true;
        }
        let best = self.best_split(grads, member, g, h);
        for &i in rows {
            member[i] = false;
        }
        let Some(best) = best else { return leaf };

        let col = &self.columns[best.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| col[i] < best.threshold);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            default_left: true,
            gain: best.gain,
            left: Box::new(self.grow(grads, &left_rows, member, depth + 1)),
            right: Box::new(self.grow(grads, &right_rows, member, depth + 1)),
        }
    }

    /// Highest-gain split; ties keep the earliest feature, then the smallest threshold.
    fn best_split(&self, grads: &[GradPair], member: &[bool], g: f64, h: f64) -> Option<SplitCandidate> {
        let TreeParams { min_child_weight, lambda, .. } = *self.params;
        let parent = score(g, h, lambda);
        let mut best: Option<SplitCandidate> = None;
        for (feature, order) in self.sorted.iter().enumerate() {
            let col = &self.columns[feature];
            let (mut gl, mut hl) = (0.0, 0.0);
            let mut prev: Option<usize> = None;
            for &i in order.iter().filter(|&&i| member[i]) {
                if let Some(p) = prev {
                    if col[i] > col[p] {
                        let (gr, hr) = (g - gl, h - hl);
                        if hl >= min_child_weight && hr >= min_child_weight {
                            let gain = 0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - parent);
                            if gain > MIN_SPLIT_GAIN && best.as_ref().is_none_or(|b| gain > b.gain) {
                                best = Some(SplitCandidate { feature, threshold: midpoint(col[p], col[i]), gain });
                            }
                        }
                    }
                }
                gl += grads[i].grad;
                hl += grads[i].hess;
                prev = Some(i);
            }
        }
        best
    }
}

/// A threshold `t` with `lo < t <= hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}
