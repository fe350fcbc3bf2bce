use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regressors::forest::RandomForest;
use crate::schema::TrainSet;

/// Trees in the reference importance forest.
pub const REFERENCE_TREES: usize = 100;
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel {
    pub feature_names: Vec<String>,
    /// Sums to 1.
    pub importances: Vec<f64>,
    pub threshold: f64,
    /// Ascending column indices.
    pub selected: Vec<usize>,
}

/// Importance-based selection against the mean importance of a reference forest.
pub fn fit_selector(train: &TrainSet, y: &[f64], seed: u64) -> Result<SelectorModel> {
    fit_on(&train.x, y, &train.feature_names, seed)
}

fn fit_on(x: &Matrix, y: &[f64], names: &[String], seed: u64) -> Result<SelectorModel> {
    let d = x.cols();
    if d == 0 {
        return Err(Error::empty("selector needs at least one feature"));
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension { expected: x.rows(), actual: y.len() });
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let fit = RandomForest::fit_with_importance(x, y, REFERENCE_TREES, None, &order, seed);
    let mut importances = fit.importances;
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    } else {
        importances.iter_mut().for_each(|v| *v = 1.0 / d as f64);
    }
    let threshold = importances.iter().sum::<f64>() / d as f64;
    let mut selected: Vec<usize> = (0..d).filter(|&i| importances[i] >= threshold - THRESHOLD_SLACK).collect();
    if selected.is_empty() {
        let top = (0..d).fold(0, |b, i| if importances[i] > importances[b] { i } else { b });
        selected.push(top);
    }
    Ok(SelectorModel { feature_names: names.to_vec(), importances, threshold, selected })
}

impl SelectorModel {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.feature_names.len() {
            return Err(Error::Dimension { expected: self.feature_names.len(), actual: x.cols() });
        }
        Ok(x.select_columns(&self.selected))
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected.iter().map(|&i| self.feature_names[i].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::Rng as _;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| alloc::format!("f{i}")).collect()
    }

    #[test]
    fn copied_feature_wins() {
        let n = 120;
        let mut rng = crate::rng::rng_from(1, &[]);
        let data: Vec<f64> = (0..n * 4).map(|_| rng.random::<f64>()).collect();
        let x = Matrix::from_vec(n, 4, data).unwrap();
        let y = x.column(2);
        let m = fit_on(&x, &y, &names(4), 3).unwrap();
        assert!(m.selected.contains(&2));
        let max = m.importances.iter().cloned().fold(0.0, f64::max);
        assert_eq!(m.importances[2], max);
    }

    #[test]
    fn identical_columns_all_selected() {
        let n = 30;
        let col: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64).collect();
        let mut data = Vec::new();
        for v in &col {
            data.extend([*v, *v, *v]);
        }
        let x = Matrix::from_vec(n, 3, data).unwrap();
        let y: Vec<f64> = col.iter().map(|v| v * v).collect();
        let m = fit_on(&x, &y, &names(3), 0).unwrap();
        assert_eq!(m.selected, vec![0, 1, 2]);
        assert!((m.importances[0] - m.importances[1]).abs() < 1e-12);
    }

    #[test]
    fn single_feature_always_selected() {
        let x = Matrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = fit_on(&x, &[0.0; 4], &["a".to_string()], 0).unwrap();
        assert_eq!(m.selected, vec![0]);
    }

    #[test]
    fn apply_keeps_original_column_order() {
        let m = SelectorModel { feature_names: names(3), importances: vec![0.4, 0.2, 0.4], threshold: 1.0 / 3.0, selected: vec![0, 2] };
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(m.apply(&x).unwrap().as_slice(), &[1.0, 3.0]);
        assert!(m.apply(&Matrix::from_rows(&[[1.0]]).unwrap()).is_err());
    }
}
