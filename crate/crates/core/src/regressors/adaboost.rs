//! AdaBoost.R2 with depth-3 regression trees and the linear loss.

use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{all_rows, RegressionTree, TreeParams};
use crate::linalg::Matrix;
use crate::rng::rng_from;

const BASE_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    trees: Vec<RegressionTree>,
    weights: Vec<f64>,
}

impl AdaBoost {
    pub fn fit(x: &Matrix, y: &[f64], n_estimators: usize, learning_rate: f64, seed: u64) -> AdaBoost {
        Self::fit_traced(x, y, n_estimators, learning_rate, seed, None)
    }

    /// As [`AdaBoost::fit`], recording the normalized sample weights that
    /// enter every round.
    pub fn fit_traced(
        x: &Matrix,
        y: &[f64],
        n_estimators: usize,
        learning_rate: f64,
        seed: u64,
        mut trace: Option<&mut Vec<Vec<f64>>>,
    ) -> AdaBoost {
        let n = x.rows();
        let features = all_rows(x.cols());
        let params = TreeParams { max_depth: Some(BASE_DEPTH), min_samples_split: 2 };
        let mut w = alloc::vec![1.0 / n as f64; n];
        let mut trees = Vec::new();
        let mut weights = Vec::new();
        let mut cdf = Vec::with_capacity(n);
        for round in 0..n_estimators {
            if let Some(t) = trace.as_deref_mut() {
                t.push(w.clone());
            }
            let mut rng = rng_from(seed, &[round as u64]);
            cdf.clear();
            let mut acc = 0.0;
            for &wi in &w {
                acc += wi;
                cdf.push(acc);
            }
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let u = rng.random::<f64>() * acc;
                    cdf.partition_point(|&c| c <= u).min(n - 1)
                })
                .collect();
            let tree = RegressionTree::fit(x, y, &rows, params, &features, None);
            let pred = tree.predict(x);
            let err: Vec<f64> = pred.iter().zip(y).map(|(p, t)| (p - t).abs()).collect();
            let max_err = err.iter().zip(&w).filter(|(_, &wi)| wi > 0.0).map(|(e, _)| *e).fold(0.0, f64::max);
            let loss: Vec<f64> = err.iter().map(|e| if max_err > 0.0 { e / max_err } else { *e }).collect();
            let avg: f64 = loss.iter().zip(&w).filter(|(_, &wi)| wi > 0.0).map(|(l, wi)| l * wi).sum();

            if avg <= 0.0 {
                trees.push(tree);
                weights.push(1.0);
                break;
            }
            if avg >= 0.5 {
                if trees.is_empty() {
                    trees.push(tree);
                    weights.push(0.0);
                }
                break;
            }
            let beta = avg / (1.0 - avg);
            trees.push(tree);
            weights.push(learning_rate * libm::log(1.0 / beta));
            if round + 1 == n_estimators {
                break;
            }
            for (wi, l) in w.iter_mut().zip(&loss) {
                if *wi > 0.0 {
                    *wi *= libm::pow(beta, (1.0 - l) * learning_rate);
                }
            }
            let s: f64 = w.iter().sum();
            if s <= 0.0 {
                break;
            }
            w.iter_mut().for_each(|v| *v /= s);
        }
        AdaBoost { trees, weights }
    }

    /// Weighted median of the per-round predictions.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let mut preds: Vec<(f64, f64)> = Vec::with_capacity(self.trees.len());
        x.row_iter()
            .map(|r| {
                preds.clear();
                preds.extend(self.trees.iter().zip(&self.weights).map(|(t, &w)| (t.predict_row(r), w)));
                preds.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for &(p, w) in &preds {
                    acc += w;
                    if acc >= 0.5 * total {
                        return p;
                    }
                }
                preds[preds.len() - 1].0
            })
            .collect()
    }

    pub fn n_rounds(&self) -> usize {
        self.trees.len()
    }

    pub fn estimator_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn first_tree(&self) -> &RegressionTree {
        &self.trees[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Matrix, Vec<f64>) {
        let n = 60;
        let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64 / 10.0).collect()).unwrap();
        let y = (0..n).map(|i| libm::sin(i as f64 / 10.0) + if i % 7 == 0 { 0.5 } else { 0.0 }).collect();
        (x, y)
    }

    #[test]
    fn one_round_is_the_base_tree() {
        let (x, y) = data();
        let m = AdaBoost::fit(&x, &y, 1, 1.0, 4);
        assert_eq!(m.n_rounds(), 1);
        assert_eq!(m.predict(&x), m.first_tree().predict(&x));
    }

    #[test]
    fn weights_stay_normalized() {
        let (x, y) = data();
        let mut trace = Vec::new();
        AdaBoost::fit_traced(&x, &y, 25, 0.666, 4, Some(&mut trace));
        assert!(!trace.is_empty());
        for w in trace {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn constant_target_stops_after_one_round() {
        let (x, _) = data();
        let y = alloc::vec![2.0; 60];
        let m = AdaBoost::fit(&x, &y, 50, 1.0, 0);
        assert_eq!(m.n_rounds(), 1);
        assert!(m.predict(&x).iter().all(|&p| p == 2.0));
    }
}
