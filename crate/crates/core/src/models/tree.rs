//! CART classification tree with weighted Gini impurity.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::label::{ClassLabel, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtcParams {
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for DtcParams {
    fn default() -> Self {
        DtcParams { max_depth: None, min_samples_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf { class: ClassLabel },
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: DtcParams,
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

struct Grower<'a> {
    x: &'a [f64],
    dim: usize,
    y: &'a [ClassLabel],
    w: &'a [f64],
    params: DtcParams,
    nodes: Vec<TreeNode>,
    degenerate_leaves: usize,
}

fn class_weights(y: &[ClassLabel], w: &[f64], idx: &[usize]) -> [f64; NUM_CLASSES] {
    let mut cw = [0.0; NUM_CLASSES];
    for &i in idx {
        cw[y[i].index()] += w[i];
    }
    cw
}

/// Weighted majority; ties go to the lower class.
fn majority(cw: &[f64; NUM_CLASSES]) -> ClassLabel {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if cw[c] > cw[best] {
            best = c;
        }
    }
    ClassLabel::new(best as u8).expect("class index in range")
}

/// `W * gini = W - sum(w_c^2) / W`.
fn scaled_gini(cw: &[f64; NUM_CLASSES], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    total - cw.iter().map(|v| v * v).sum::<f64>() / total
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<'a> Grower<'a> {
    fn value(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.dim + feature]
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let cw = class_weights(self.y, self.w, idx);
        let leaf = TreeNode::Leaf { class: majority(&cw) };
        self.nodes.push(leaf);

        let pure = cw.iter().filter(|&&v| v > 0.0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || idx.len() < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(split) = self.best_split(idx) else {
            if self.all_rows_identical(idx) {
                self.degenerate_leaves += 1;
            }
            return id;
        };

        // stable partition keeps index order deterministic within children
        let (mut left, mut right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.value(i, split.feature) <= split.threshold);
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[id] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left: l, right: r };
        id
    }

    fn all_rows_identical(&self, idx: &[usize]) -> bool {
        let first = idx[0];
        idx.iter().all(|&i| (0..self.dim).all(|d| self.value(i, d) == self.value(first, d)))
    }

    /// Lowest weighted Gini over all axis-aligned midpoint thresholds.
    /// Ties keep the first candidate: lowest feature, then lowest threshold.
    fn best_split(&self, idx: &[usize]) -> Option<Split> {
        let min_leaf = self.params.min_samples_leaf.max(1);
        let total_cw = class_weights(self.y, self.w, idx);
        let total: f64 = total_cw.iter().sum();
        let mut best: Option<Split> = None;
        let mut order: Vec<usize> = idx.to_vec();

        for f in 0..self.dim {
            order.sort_by(|&a, &b| self.value(a, f).total_cmp(&self.value(b, f)).then(a.cmp(&b)));
            let mut left = [0.0; NUM_CLASSES];
            let mut left_w = 0.0;
            for k in 0..order.len() - 1 {
                let i = order[k];
                left[self.y[i].index()] += self.w[i];
                left_w += self.w[i];
                let (a, b) = (self.value(i, f), self.value(order[k + 1], f));
                if a == b || k + 1 < min_leaf || order.len() - (k + 1) < min_leaf {
                    continue;
                }
                let mut right = [0.0; NUM_CLASSES];
                for c in 0..NUM_CLASSES {
                    right[c] = (total_cw[c] - left[c]).max(0.0);
                }
                let right_w = (total - left_w).max(0.0);
                let impurity = scaled_gini(&left, left_w) + scaled_gini(&right, right_w);
                if best.as_ref().is_none_or(|s| impurity < s.impurity) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Split { feature: f, threshold, impurity });
                }
            }
        }
        best
    }
}

pub(super) fn fit(
    x: &[f64],
    dim: usize,
    y: &[ClassLabel],
    w: &[f64],
    params: &DtcParams,
) -> Result<(DecisionTree, Vec<String>), ModelError> {
    if y.is_empty() {
        return Err(ModelError::EmptyData);
    }
    if params.min_samples_leaf == 0 {
        return Err(ModelError::InvalidHyperparameter("min_samples_leaf must be at least 1"));
    }
    let mut g = Grower { x, dim, y, w, params: *params, nodes: vec![], degenerate_leaves: 0 };
    let mut idx: Vec<usize> = (0..y.len()).collect();
    g.grow(&mut idx, 0);
    let mut warnings = Vec::new();
    if g.degenerate_leaves > 0 {
        warnings.push(format!(
            "degenerate data: {} leaves hold identical inputs with conflicting labels",
            g.degenerate_leaves
        ));
    }
    Ok((DecisionTree { params: *params, nodes: g.nodes }, warnings))
}
