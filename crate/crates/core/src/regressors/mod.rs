//! The six regressor families behind one fit/predict contract, and their
//! hyperparameter grids.

pub mod adaboost;
pub mod forest;
pub mod knn;
pub mod mlp;
pub mod ridge;
pub mod svr;
pub mod tree;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use adaboost::AdaBoost;
pub use forest::RandomForest;
pub use knn::KNeighbors;
pub use mlp::{Mlp, MlpParams};
pub use ridge::Ridge;
pub use svr::{Kernel, KernelKind, Svr, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "SVR")]
    Svr,
    #[serde(rename = "KNR")]
    Knr,
    #[serde(rename = "NN")]
    Nn,
    #[serde(rename = "ABR")]
    Abr,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::Rf, Family::Rr, Family::Svr, Family::Knr, Family::Nn, Family::Abr];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Rf => "RF",
            Family::Rr => "RR",
            Family::Svr => "SVR",
            Family::Knr => "KNR",
            Family::Nn => "NN",
            Family::Abr => "ABR",
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown family {s:?}")))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const RF_N_ESTIMATORS: [usize; 6] = [1, 2, 3, 4, 5, 6];
pub const RF_MAX_DEPTH: [usize; 6] = [5, 6, 7, 8, 9, 10];
pub const RR_ALPHA: [f64; 11] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5];
pub const RR_FIT_INTERCEPT: [bool; 2] = [false, true];
pub const SVR_KERNEL: [KernelKind; 3] = [KernelKind::Poly, KernelKind::Rbf, KernelKind::Sigmoid];
pub const SVR_DEGREE: [u32; 7] = [1, 2, 3, 4, 5, 6, 7];
pub const SVR_EPSILON: [f64; 4] = [0.01, 0.1, 0.5, 1.0];
pub const SVR_C: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const KNR_LEAF_SIZE: [usize; 3] = [10, 20, 30];
pub const KNR_N_NEIGHBORS: [usize; 3] = [2, 4, 6];
pub const KNR_P: [u32; 3] = [1, 2, 3];
pub const NN_ALPHA: [f64; 5] = [0.0001, 0.0003, 0.001, 0.003, 0.01];
pub const NN_HIDDEN: [&[usize]; 7] = [&[80], &[100], &[80, 80], &[100, 100], &[80, 80, 80], &[100, 100, 100], &[200, 200, 200]];
pub const ABR_N_ESTIMATORS: [usize; 5] = [50, 75, 100, 125, 150];
pub const ABR_LEARNING_RATE: [f64; 4] = [0.0, 0.333, 0.666, 1.0];
/// Stand-in for a zero AdaBoost learning rate, which would leave every round unweighted.
pub const ABR_ZERO_RATE_SUBSTITUTE: f64 = 1e-3;

/// One grid cell: a family and a value for each of its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Hyperparameters {
    #[serde(rename = "RF")]
    Rf { n_estimators: usize, max_depth: usize },
    #[serde(rename = "RR")]
    Rr { alpha: f64, fit_intercept: bool },
    #[serde(rename = "SVR")]
    Svr {
        kernel: KernelKind,
        degree: u32,
        epsilon: f64,
        #[serde(rename = "C")]
        c: f64,
    },
    #[serde(rename = "KNR")]
    Knr { leaf_size: usize, n_neighbors: usize, p: u32 },
    #[serde(rename = "NN")]
    Nn { alpha: f64, hidden_layer_sizes: Vec<usize> },
    #[serde(rename = "ABR")]
    Abr { n_estimators: usize, learning_rate: f64 },
}

impl Hyperparameters {
    pub fn family(&self) -> Family {
        match self {
            Hyperparameters::Rf { .. } => Family::Rf,
            Hyperparameters::Rr { .. } => Family::Rr,
            Hyperparameters::Svr { .. } => Family::Svr,
            Hyperparameters::Knr { .. } => Family::Knr,
            Hyperparameters::Nn { .. } => Family::Nn,
            Hyperparameters::Abr { .. } => Family::Abr,
        }
    }

    /// Checks every value against the family's grid lists.
    pub fn validate(&self) -> Result<()> {
        let fam = self.family().as_str();
        let bad = |name: &str, v: String| Err(Error::Hyperparameter { family: fam, reason: format!("{name} = {v} is outside the grid") });
        match self {
            Hyperparameters::Rf { n_estimators, max_depth } => {
                if !RF_N_ESTIMATORS.contains(n_estimators) {
                    return bad("n_estimators", n_estimators.to_string());
                }
                if !RF_MAX_DEPTH.contains(max_depth) {
                    return bad("max_depth", max_depth.to_string());
                }
            }
            Hyperparameters::Rr { alpha, .. } => {
                if !RR_ALPHA.contains(alpha) {
                    return bad("alpha", format!("{alpha}"));
                }
            }
            Hyperparameters::Svr { degree, epsilon, c, .. } => {
                if !SVR_DEGREE.contains(degree) {
                    return bad("degree", degree.to_string());
                }
                if !SVR_EPSILON.contains(epsilon) {
                    return bad("epsilon", format!("{epsilon}"));
                }
                if !SVR_C.contains(c) {
                    return bad("C", format!("{c}"));
                }
            }
            Hyperparameters::Knr { leaf_size, n_neighbors, p } => {
                if !KNR_LEAF_SIZE.contains(leaf_size) {
                    return bad("leaf_size", leaf_size.to_string());
                }
                if !KNR_N_NEIGHBORS.contains(n_neighbors) {
                    return bad("n_neighbors", n_neighbors.to_string());
                }
                if !KNR_P.contains(p) {
                    return bad("p", p.to_string());
                }
            }
            Hyperparameters::Nn { alpha, hidden_layer_sizes } => {
                if !NN_ALPHA.contains(alpha) {
                    return bad("alpha", format!("{alpha}"));
                }
                if !NN_HIDDEN.iter().any(|h| *h == hidden_layer_sizes.as_slice()) {
                    return bad("hidden_layer_sizes", format!("{hidden_layer_sizes:?}"));
                }
            }
            Hyperparameters::Abr { n_estimators, learning_rate } => {
                if !ABR_N_ESTIMATORS.contains(n_estimators) {
                    return bad("n_estimators", n_estimators.to_string());
                }
                if !ABR_LEARNING_RATE.contains(learning_rate) {
                    return bad("learning_rate", format!("{learning_rate}"));
                }
            }
        }
        Ok(())
    }

    /// Cells with equal canonical forms train identical models; the SVR degree
    /// only matters for the polynomial kernel.
    pub fn canonical(&self) -> Hyperparameters {
        match self {
            Hyperparameters::Svr { kernel, epsilon, c, .. } if *kernel != KernelKind::Poly => {
                Hyperparameters::Svr { kernel: *kernel, degree: 0, epsilon: *epsilon, c: *c }
            }
            other => other.clone(),
        }
    }

    /// Note describing a value that is replaced at fit time, if any.
    pub fn substitution(&self) -> Option<String> {
        match self {
            Hyperparameters::Abr { learning_rate, .. } if *learning_rate == 0.0 => {
                Some(format!("learning_rate 0.0 fitted as {ABR_ZERO_RATE_SUBSTITUTE}"))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperparameters::Rf { n_estimators, max_depth } => write!(f, "n_estimators={n_estimators};max_depth={max_depth}"),
            Hyperparameters::Rr { alpha, fit_intercept } => write!(f, "alpha={alpha:e};fit_intercept={fit_intercept}"),
            Hyperparameters::Svr { kernel, degree, epsilon, c } => {
                write!(f, "kernel={};degree={degree};epsilon={epsilon};C={c}", kernel.as_str())
            }
            Hyperparameters::Knr { leaf_size, n_neighbors, p } => write!(f, "leaf_size={leaf_size};n_neighbors={n_neighbors};p={p}"),
            Hyperparameters::Nn { alpha, hidden_layer_sizes } => {
                write!(f, "alpha={alpha};hidden_layer_sizes=(")?;
                for (i, h) in hidden_layer_sizes.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{h}")?;
                }
                f.write_str(")")
            }
            Hyperparameters::Abr { n_estimators, learning_rate } => write!(f, "n_estimators={n_estimators};learning_rate={learning_rate}"),
        }
    }
}

/// The full grid of a family, enumerated row-major over the listed value order.
pub fn grid(family: Family) -> Vec<Hyperparameters> {
    let mut out = Vec::new();
    match family {
        Family::Rf => {
            for &n_estimators in &RF_N_ESTIMATORS {
                for &max_depth in &RF_MAX_DEPTH {
                    out.push(Hyperparameters::Rf { n_estimators, max_depth });
                }
            }
        }
        Family::Rr => {
            for &alpha in &RR_ALPHA {
                for &fit_intercept in &RR_FIT_INTERCEPT {
                    out.push(Hyperparameters::Rr { alpha, fit_intercept });
                }
            }
        }
        Family::Svr => {
            for &kernel in &SVR_KERNEL {
                for &degree in &SVR_DEGREE {
                    for &epsilon in &SVR_EPSILON {
                        for &c in &SVR_C {
                            out.push(Hyperparameters::Svr { kernel, degree, epsilon, c });
                        }
                    }
                }
            }
        }
        Family::Knr => {
            for &leaf_size in &KNR_LEAF_SIZE {
                for &n_neighbors in &KNR_N_NEIGHBORS {
                    for &p in &KNR_P {
                        out.push(Hyperparameters::Knr { leaf_size, n_neighbors, p });
                    }
                }
            }
        }
        Family::Nn => {
            for &alpha in &NN_ALPHA {
                for h in NN_HIDDEN {
                    out.push(Hyperparameters::Nn { alpha, hidden_layer_sizes: h.to_vec() });
                }
            }
        }
        Family::Abr => {
            for &n_estimators in &ABR_N_ESTIMATORS {
                for &learning_rate in &ABR_LEARNING_RATE {
                    out.push(Hyperparameters::Abr { n_estimators, learning_rate });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl EstimatorSpec {
    pub fn new(hyperparameters: Hyperparameters, seed: u64) -> Result<EstimatorSpec> {
        hyperparameters.validate()?;
        Ok(EstimatorSpec { hyperparameters, seed })
    }

    pub fn family(&self) -> Family {
        self.hyperparameters.family()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Model {
    Rf(RandomForest),
    Rr(Ridge),
    Svr(Svr),
    Knr(KNeighbors),
    Nn(Mlp),
    Abr(AdaBoost),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: EstimatorSpec,
    pub n_features: usize,
    pub model: Model,
}

impl TrainedModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, actual: x.cols() });
        }
        Ok(match &self.model {
            Model::Rf(m) => m.predict(x),
            Model::Rr(m) => m.predict(x),
            Model::Svr(m) => m.predict(x),
            Model::Knr(m) => m.predict(x),
            Model::Nn(m) => m.predict(x),
            Model::Abr(m) => m.predict(x),
        })
    }

    /// False only for an SVR stopped by the iteration cap.
    pub fn converged(&self) -> bool {
        match &self.model {
            Model::Svr(m) => m.converged,
            _ => true,
        }
    }
}

pub fn fit(spec: &EstimatorSpec, x: &Matrix, y: &[f64]) -> Result<TrainedModel> {
    spec.hyperparameters.validate()?;
    let n = x.rows();
    if n < 2 {
        return Err(Error::empty(format!("need at least 2 training rows, got {n}")));
    }
    if y.len() != n {
        return Err(Error::Dimension { expected: n, actual: y.len() });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite training data".to_string()));
    }
    let seed = spec.seed;
    let model = match &spec.hyperparameters {
        Hyperparameters::Rf { n_estimators, max_depth } => Model::Rf(RandomForest::fit(x, y, *n_estimators, Some(*max_depth), seed)),
        Hyperparameters::Rr { alpha, fit_intercept } => Model::Rr(Ridge::fit(x, y, *alpha, *fit_intercept)?),
        Hyperparameters::Svr { kernel, degree, epsilon, c } => {
            let k = Kernel::scaled(*kernel, *degree, x);
            Model::Svr(Svr::fit(x, y, &SvrParams::new(k, *c, *epsilon)))
        }
        Hyperparameters::Knr { leaf_size, n_neighbors, p } => Model::Knr(KNeighbors::fit(x, y, *n_neighbors, *p as f64, *leaf_size)?),
        Hyperparameters::Nn { alpha, hidden_layer_sizes } => {
            let params = MlpParams { alpha: *alpha, ..MlpParams::default() };
            Model::Nn(Mlp::fit(x, y, hidden_layer_sizes, &params, seed))
        }
        Hyperparameters::Abr { n_estimators, learning_rate } => {
            let lr = if *learning_rate == 0.0 { ABR_ZERO_RATE_SUBSTITUTE } else { *learning_rate };
            Model::Abr(AdaBoost::fit(x, y, *n_estimators, lr, seed))
        }
    };
    Ok(TrainedModel { spec: spec.clone(), n_features: x.cols(), model })
}

/// Grid sizes per family, in [`Family::ALL`] order.
pub fn grid_sizes() -> [usize; 6] {
    let mut s = [0; 6];
    for (i, f) in Family::ALL.iter().enumerate() {
        s[i] = grid(*f).len();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_products() {
        assert_eq!(grid_sizes(), [36, 22, 336, 27, 35, 20]);
        assert_eq!(grid_sizes().iter().sum::<usize>(), 476);
    }

    #[test]
    fn grid_cells_validate_and_enumerate_row_major() {
        for f in Family::ALL {
            for h in grid(f) {
                h.validate().unwrap();
                assert_eq!(h.family(), f);
            }
        }
        let rf = grid(Family::Rf);
        assert_eq!(rf[0], Hyperparameters::Rf { n_estimators: 1, max_depth: 5 });
        assert_eq!(rf[1], Hyperparameters::Rf { n_estimators: 1, max_depth: 6 });
        assert_eq!(rf[35], Hyperparameters::Rf { n_estimators: 6, max_depth: 10 });
    }

    #[test]
    fn off_grid_values_rejected() {
        let h = Hyperparameters::Knr { leaf_size: 15, n_neighbors: 2, p: 2 };
        assert!(matches!(h.validate(), Err(Error::Hyperparameter { family: "KNR", .. })));
        assert!(EstimatorSpec::new(Hyperparameters::Rr { alpha: 0.5, fit_intercept: true }, 0).is_err());
    }

    #[test]
    fn predict_checks_width() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]]).unwrap();
        let spec = EstimatorSpec::new(Hyperparameters::Rr { alpha: 1.0, fit_intercept: true }, 0).unwrap();
        let m = fit(&spec, &x, &[1.0, 2.0, 3.0]).unwrap();
        let narrow = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(m.predict(&narrow), Err(Error::Dimension { expected: 2, actual: 1 }));
    }

    #[test]
    fn zero_learning_rate_is_substituted() {
        let h = Hyperparameters::Abr { n_estimators: 50, learning_rate: 0.0 };
        assert!(h.substitution().is_some());
        assert!(Hyperparameters::Abr { n_estimators: 50, learning_rate: 1.0 }.substitution().is_none());
    }

    #[test]
    fn canonical_form_ignores_degree_for_non_polynomial_kernels() {
        let a = Hyperparameters::Svr { kernel: KernelKind::Rbf, degree: 1, epsilon: 0.1, c: 1.0 };
        let b = Hyperparameters::Svr { kernel: KernelKind::Rbf, degree: 7, epsilon: 0.1, c: 1.0 };
        assert_eq!(a.canonical(), b.canonical());
        let p1 = Hyperparameters::Svr { kernel: KernelKind::Poly, degree: 1, epsilon: 0.1, c: 1.0 };
        let p2 = Hyperparameters::Svr { kernel: KernelKind::Poly, degree: 2, epsilon: 0.1, c: 1.0 };
        assert_ne!(p1.canonical(), p2.canonical());
    }
}
