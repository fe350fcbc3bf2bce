use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gemm, symmetric_eigen, MatRef, Matrix};
use crate::schema::TrainSet;

/// Fraction of variance the retained components must explain.
pub const RETAINED_VARIANCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub input_names: Vec<String>,
    pub mean: Vec<f64>,
    /// `k x d`, orthonormal rows.
    pub components: Matrix,
    /// Eigenvalues of the covariance, descending, negatives clamped to 0.
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

pub fn fit_pca(train: &TrainSet) -> Result<PcaModel> {
    fit_on(&train.x, &train.feature_names)
}

pub(crate) fn fit_on(x: &Matrix, names: &[String]) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 || d == 0 {
        return Err(Error::empty(format!("PCA needs at least 2 rows and 1 column, got {n}x{d}")));
    }
    let mean = x.column_means();
    let mut centred = x.clone();
    for i in 0..n {
        for (v, m) in centred.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    let c = centred.as_slice();
    gemm(d, n, d, 1.0 / (n - 1) as f64, MatRef::transposed(c, d), MatRef::row_major(c, d), 0.0, cov.as_mut_slice(), d);
    let (vals, mut vecs) = symmetric_eigen(&cov)?;
    let vals: Vec<f64> = vals.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = vals.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("training features have zero total variance".into()));
    }
    let ratio: Vec<f64> = vals.iter().map(|v| v / total).collect();
    let k = retained_components(&ratio);

    for r in 0..d {
        let row = vecs.row_mut(r);
        let lead = (0..d).fold(0, |b, j| if row[j].abs() > row[b].abs() { j } else { b });
        if row[lead] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let keep: Vec<usize> = (0..k).collect();
    Ok(PcaModel {
        input_names: names.to_vec(),
        mean,
        components: vecs.select_rows(&keep),
        explained_variance: vals,
        explained_variance_ratio: ratio,
    })
}

/// Smallest count whose cumulative ratio reaches [`RETAINED_VARIANCE`].
pub fn retained_components(ratio: &[f64]) -> usize {
    let mut acc = 0.0;
    for (i, r) in ratio.iter().enumerate() {
        acc += r;
        if acc >= RETAINED_VARIANCE {
            return i + 1;
        }
    }
    ratio.len()
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn output_names(&self) -> Vec<String> {
        (1..=self.k()).map(|i| format!("pc{i}")).collect()
    }

    /// `(X - mean) W'`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.mean.len();
        if x.cols() != d {
            return Err(Error::Dimension { expected: d, actual: x.cols() });
        }
        let n = x.rows();
        let mut centred = x.clone();
        for i in 0..n {
            for (v, m) in centred.row_mut(i).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        let k = self.k();
        let mut out = Matrix::zeros(n, k);
        gemm(n, d, k, 1.0, MatRef::row_major(centred.as_slice(), d), MatRef::transposed(self.components.as_slice(), d), 0.0, out.as_mut_slice(), k);
        Ok(out)
    }

    /// Maps scores back to the input space.
    pub fn reconstruct(&self, scores: &Matrix) -> Result<Matrix> {
        let k = self.k();
        if scores.cols() != k {
            return Err(Error::Dimension { expected: k, actual: scores.cols() });
        }
        let d = self.mean.len();
        let n = scores.rows();
        let mut out = Matrix::zeros(n, d);
        for i in 0..n {
            out.row_mut(i).copy_from_slice(&self.mean);
        }
        gemm(n, k, d, 1.0, MatRef::row_major(scores.as_slice(), k), MatRef::row_major(self.components.as_slice(), d), 1.0, out.as_mut_slice(), d);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| i.to_string()).collect()
    }

    #[test]
    fn dominant_axis_gives_one_component() {
        let n = 50;
        let mut data = Vec::new();
        for i in 0..n {
            let t = i as f64 - 25.0;
            data.extend([t, 1e-12 * ((i * 7) % 5) as f64, -1e-12 * ((i * 3) % 4) as f64]);
        }
        let m = fit_on(&Matrix::from_vec(n, 3, data).unwrap(), &names(3)).unwrap();
        assert_eq!(m.k(), 1);
        assert!(m.components[(0, 0)] > 0.999);
    }

    #[test]
    fn mean_row_maps_to_origin() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 1.0], [0.0, 5.0], [2.0, 2.0]]).unwrap();
        let m = fit_on(&x, &names(2)).unwrap();
        let mean = Matrix::from_vec(1, 2, m.mean.clone()).unwrap();
        assert!(m.apply(&mean).unwrap().as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_rank_reconstruction_is_exact() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let m = fit_on(&x, &names(2)).unwrap();
        assert_eq!(m.k(), 2);
        let back = m.reconstruct(&m.apply(&x).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn retention_rule_is_minimal() {
        assert_eq!(retained_components(&[0.5, 0.46, 0.04]), 2);
        assert_eq!(retained_components(&[0.96, 0.04]), 1);
        assert_eq!(retained_components(&[0.5, 0.3, 0.1, 0.1]), 4);
    }
}
