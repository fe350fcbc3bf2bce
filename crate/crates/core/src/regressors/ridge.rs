use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{cholesky, cholesky_solve, dot, gemm, symmetric_eigen, MatRef, Matrix};

/// Minimizer of `||y - Xw - b||^2 + alpha ||w||^2`; the intercept is not penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl Ridge {
    pub fn fit(x: &Matrix, y: &[f64], alpha: f64, fit_intercept: bool) -> Result<Ridge> {
        let n = x.rows();
        let d = x.cols();
        let (x_mean, y_mean) = if fit_intercept {
            (x.column_means(), y.iter().sum::<f64>() / n as f64)
        } else {
            (vec![0.0; d], 0.0)
        };
        let mut xc = x.clone();
        for i in 0..n {
            for (v, m) in xc.row_mut(i).iter_mut().zip(&x_mean) {
                *v -= m;
            }
        }
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

        let mut gram = Matrix::zeros(d, d);
        gemm(d, n, d, 1.0, MatRef::transposed(xc.as_slice(), d), MatRef::row_major(xc.as_slice(), d), 0.0, gram.as_mut_slice(), d);
        for j in 0..d {
            gram[(j, j)] += alpha;
        }
        let mut rhs = vec![0.0; d];
        for (row, &t) in xc.row_iter().zip(&yc) {
            for (r, v) in rhs.iter_mut().zip(row) {
                *r += v * t;
            }
        }
        let coef = match cholesky(&gram) {
            Ok(l) => cholesky_solve(&l, &rhs),
            Err(_) => pseudo_solve(&gram, &rhs)?,
        };
        let intercept = if fit_intercept { y_mean - dot(&x_mean, &coef) } else { 0.0 };
        Ok(Ridge { coef, intercept })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|r| dot(r, &self.coef) + self.intercept).collect()
    }
}

/// Eigen-based pseudo-inverse solve for a symmetric system that Cholesky refused.
fn pseudo_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (vals, vecs) = symmetric_eigen(a)?;
    let tol = vals.first().copied().unwrap_or(0.0).abs() * 1e-12 * a.rows() as f64;
    let mut x = vec![0.0; b.len()];
    for (k, &lam) in vals.iter().enumerate() {
        if lam.abs() <= tol {
            continue;
        }
        let v = vecs.row(k);
        let c = dot(v, b) / lam;
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += c * vi;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = Matrix::from_vec(30, 1, (0..30).map(|i| i as f64 * 0.1 - 1.0).collect()).unwrap();
        let y: Vec<f64> = x.column(0).iter().map(|v| 2.0 * v + 1.0).collect();
        let r = Ridge::fit(&x, &y, 1e-5, true).unwrap();
        assert!((r.coef[0] - 2.0).abs() < 1e-4);
        assert!((r.intercept - 1.0).abs() < 1e-4);
    }

    #[test]
    fn no_intercept_passes_through_origin() {
        let x = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let r = Ridge::fit(&x, &[3.0, 5.0, 7.0], 1e-5, false).unwrap();
        assert_eq!(r.intercept, 0.0);
        // least squares through origin: sum(xy)/sum(x^2) = 34/14
        assert!((r.coef[0] - 34.0 / 14.0).abs() < 1e-5);
    }

    #[test]
    fn constant_target_predicted_exactly() {
        let x = Matrix::from_vec(5, 2, vec![1.0, 0.0, 2.0, 1.0, 0.5, 3.0, 4.0, 4.0, 2.0, 2.0]).unwrap();
        let r = Ridge::fit(&x, &[7.0; 5], 10.0, true).unwrap();
        for p in r.predict(&x) {
            assert!((p - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_handles_singular_gram() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let x = pseudo_solve(&a, &[2.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
