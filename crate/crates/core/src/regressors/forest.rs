use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{all_rows, normalize, zeros, RegressionTree, TreeParams};
use crate::linalg::Matrix;
use crate::rng::rng_from;

/// Bagged CART trees; prediction is the mean over trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

/// Per-fit output of [`RandomForest::fit_with_importance`].
pub struct ForestFit {
    pub forest: RandomForest,
    /// Mean over trees of each tree's normalized impurity decrease.
    pub importances: Vec<f64>,
}

impl RandomForest {
    pub fn fit(x: &Matrix, y: &[f64], n_estimators: usize, max_depth: Option<usize>, seed: u64) -> RandomForest {
        let order = all_rows(x.cols());
        Self::fit_with_importance(x, y, n_estimators, max_depth, &order, seed).forest
    }

    /// Bootstrap size is `n`; every feature is a split candidate, scanned in
    /// `feature_order`.
    pub fn fit_with_importance(
        x: &Matrix,
        y: &[f64],
        n_estimators: usize,
        max_depth: Option<usize>,
        feature_order: &[usize],
        seed: u64,
    ) -> ForestFit {
        let n = x.rows();
        let d = x.cols();
        let mut importances = zeros(d);
        let mut trees = Vec::with_capacity(n_estimators);
        let params = TreeParams { max_depth, min_samples_split: 2 };
        for t in 0..n_estimators {
            let mut rng = rng_from(seed, &[t as u64]);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut imp = zeros(d);
            trees.push(RegressionTree::fit(x, y, &rows, params, feature_order, Some(&mut imp)));
            normalize(&mut imp);
            for (acc, v) in importances.iter_mut().zip(&imp) {
                *acc += v;
            }
        }
        importances.iter_mut().for_each(|v| *v /= n_estimators as f64);
        ForestFit { forest: RandomForest { trees }, importances }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        x.row_iter()
            .map(|r| self.trees.iter().map(|t| t.predict_row(r)).sum::<f64>() / k)
            .collect()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
