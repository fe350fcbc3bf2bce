//! CART regression tree with variance-reduction splits. Shared by the random
//! forest, the AdaBoost base learner and the importance forest used for
//! feature selection.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_samples_split: 2 }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// `n * impurity(node) - n_l * impurity(l) - n_r * impurity(r)`
    gain: f64,
    n_left: usize,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    features: &'a [usize],
    importance: Option<&'a mut [f64]>,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64)>,
}

impl RegressionTree {
    /// Fits on the (possibly repeated) row indices `rows`. Features are scanned
    /// in the order given by `features`; on exactly equal gains the earlier
    /// feature defines the split and the gain is credited equally to all tied
    /// features when `importance` is supplied.
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        rows: &[usize],
        params: TreeParams,
        features: &[usize],
        importance: Option<&mut [f64]>,
    ) -> RegressionTree {
        let mut b = Builder { x, y, params, features, importance, nodes: Vec::new(), scratch: Vec::with_capacity(rows.len()) };
        let mut idx = rows.to_vec();
        b.grow(&mut idx, 0);
        RegressionTree { nodes: b.nodes }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left as usize).max(go(nodes, *right as usize)),
            }
        }
        go(&self.nodes, 0)
    }
}

impl Builder<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let mean = sum / n as f64;
        self.nodes.push(Node::Leaf { value: mean });

        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        if !depth_ok || n < self.params.min_samples_split || pure {
            return id;
        }
        let Some((best, tied)) = self.best_split(idx, sum) else {
            return id;
        };
        if let Some(imp) = self.importance.as_deref_mut() {
            let share = best.gain / tied.len() as f64;
            for &f in &tied {
                imp[f] += share;
            }
        }
        // partition in place, keeping relative order on each side
        let (f, thr) = (best.feature, best.threshold);
        let mut left: Vec<usize> = Vec::with_capacity(best.n_left);
        let mut right: Vec<usize> = Vec::with_capacity(n - best.n_left);
        for &i in idx.iter() {
            if self.x[(i, f)] <= thr {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[id as usize] = Node::Split { feature: f, threshold: thr, left: l, right: r };
        id
    }

    fn best_split(&mut self, idx: &[usize], total: f64) -> Option<(Candidate, Vec<usize>)> {
        let n = idx.len() as f64;
        let base = total * total / n;
        let mut best: Option<Candidate> = None;
        let mut tied: Vec<usize> = Vec::new();
        for &f in self.features {
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&i| (self.x[(i, f)], self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let s = &self.scratch;
            if s[0].0 == s[s.len() - 1].0 {
                continue;
            }
            let mut left_sum = 0.0;
            let mut feat_best: Option<(f64, usize)> = None;
            for k in 0..s.len() - 1 {
                left_sum += s[k].1;
                if s[k].0 == s[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - base;
                if feat_best.is_none_or(|(g, _)| gain > g) {
                    feat_best = Some((gain, k));
                }
            }
            let Some((gain, k)) = feat_best else { continue };
            let mut threshold = 0.5 * (s[k].0 + s[k + 1].0);
            if threshold >= s[k + 1].0 {
                threshold = s[k].0;
            }
            match &best {
                Some(b) if gain < b.gain => {}
                Some(b) if gain == b.gain => tied.push(f),
                _ => {
                    best = Some(Candidate { feature: f, threshold, gain, n_left: k + 1 });
                    tied.clear();
                    tied.push(f);
                }
            }
        }
        match best {
            Some(b) if b.gain > 0.0 => Some((b, tied)),
            _ => None,
        }
    }
}

/// Node-impurity importances of one fitted tree, normalized to sum 1 (all
/// zeros when the tree never split).
pub fn normalize(imp: &mut [f64]) {
    let s: f64 = imp.iter().sum();
    if s > 0.0 {
        imp.iter_mut().for_each(|v| *v /= s);
    }
}

pub(crate) fn all_rows(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub(crate) fn zeros(n: usize) -> Vec<f64> {
    vec![0.0; n]
}
