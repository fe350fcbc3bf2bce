//! Test-set metrics, quality bands and the KQI mutual-information matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Strategy;
use crate::linalg::Matrix;
use crate::pipeline::ModelChain;
use crate::regressors::{Family, Hyperparameters};
use crate::schema::{Kqi, TestSet};

fn check(y: &[f64], pred: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::empty("no values to score"));
    }
    if y.len() != pred.len() {
        return Err(Error::Dimension { expected: y.len(), actual: pred.len() });
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(y: &[f64], pred: &[f64]) -> Result<f64> {
    check(y, pred)?;
    Ok(abs_error_sum(y, pred) / y.len() as f64)
}

/// `sum |y - pred| / sum y`; undefined unless the targets sum to a positive value.
pub fn mae_pct(y: &[f64], pred: &[f64]) -> Result<f64> {
    check(y, pred)?;
    let total: f64 = y.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical(format!("MAE% undefined for target sum {total}")));
    }
    Ok(abs_error_sum(y, pred) / total)
}

fn abs_error_sum(y: &[f64], pred: &[f64]) -> f64 {
    y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Proper,
    Suitable,
    Acceptable,
    Inappropriate,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Proper => "proper",
            Band::Suitable => "suitable",
            Band::Acceptable => "acceptable",
            Band::Inappropriate => "inappropriate",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn band(mae_pct: f64) -> Band {
    if mae_pct < 0.10 {
        Band::Proper
    } else if mae_pct < 0.20 {
        Band::Suitable
    } else if mae_pct <= 0.50 {
        Band::Acceptable
    } else {
        Band::Inappropriate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub kqi: Kqi,
    pub strategy: Strategy,
    pub family: Family,
    pub best_hyperparameters: Hyperparameters,
    pub mae: f64,
    /// `None` when the test targets do not sum to a positive value.
    pub mae_pct: Option<f64>,
    pub band: Option<Band>,
    /// Filled in by the caller that owns a clock.
    pub ptime_us: Option<f64>,
    pub n_test: usize,
    pub n_features: usize,
    pub converged: bool,
    pub note: Option<String>,
}

/// Scores a fitted chain on the held-out split in natural target units.
pub fn evaluate(chain: &ModelChain, test: &TestSet) -> Result<EvaluationReport> {
    let y = test.target(chain.kqi)?;
    let pred = chain.predict(&test.x)?;
    let err = mae(y, &pred)?;
    let pct = mae_pct(y, &pred).ok();
    Ok(EvaluationReport {
        kqi: chain.kqi,
        strategy: chain.strategy,
        family: chain.model.spec.family(),
        best_hyperparameters: chain.model.spec.hyperparameters.clone(),
        mae: err,
        mae_pct: pct,
        band: pct.map(band),
        ptime_us: None,
        n_test: y.len(),
        n_features: chain.model.n_features,
        converged: chain.model.converged(),
        note: chain.model.spec.hyperparameters.substitution(),
    })
}

pub const DEFAULT_BINS: usize = 16;

/// Equal-frequency bin index of every value (at most `bins` distinct labels).
pub fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = (1..bins).map(|k| sorted[(k * n / bins).min(n - 1)]).collect();
    cuts.dedup();
    cuts.retain(|&c| c > sorted[0]);
    values.iter().map(|v| cuts.partition_point(|c| c <= v)).collect()
}

fn entropy_of(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = alloc::vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    counts.iter().filter(|&&c| c > 0).map(|&c| {
        let p = c as f64 / n;
        -p * libm::log2(p)
    }).sum()
}

fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = alloc::vec![0usize; ka * kb];
    let mut pa = alloc::vec![0usize; ka];
    let mut pb = alloc::vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            mi += pxy * libm::log2(pxy * n * n / (pa[x] as f64 * pb[y] as f64));
        }
    }
    mi.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiMatrix {
    pub kqis: Vec<Kqi>,
    pub bins: usize,
    /// Bits; the diagonal holds the binned entropies.
    pub values: Matrix,
}

/// Pairwise mutual information between the given target columns.
pub fn mi_matrix(columns: &[(Kqi, &[f64])], bins: usize) -> Result<MiMatrix> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if bins < 2 {
        return Err(Error::config("at least 2 bins are required"));
    }
    if n < 10 * bins {
        return Err(Error::empty(format!("{n} records are fewer than 10 x {bins} bins")));
    }
    if let Some(c) = columns.iter().find(|c| c.1.len() != n) {
        return Err(Error::Dimension { expected: n, actual: c.1.len() });
    }
    let labels: Vec<Vec<usize>> = columns.iter().map(|c| quantile_bins(c.1, bins)).collect();
    let k = columns.len();
    let mut values = Matrix::zeros(k, k);
    for i in 0..k {
        values[(i, i)] = entropy_of(&labels[i]);
        for j in 0..i {
            let v = mutual_information(&labels[i], &labels[j]);
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(MiMatrix { kqis: columns.iter().map(|c| c.0).collect(), bins, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_checked_errors() {
        assert_eq!(mae(&[2.0, 4.0], &[3.0, 3.0]).unwrap(), 1.0);
        assert!((mae_pct(&[2.0, 4.0], &[3.0, 3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mae_pct(&[10.0], &[12.0]).unwrap() - 0.2).abs() < 1e-15);
        assert!(mae_pct(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn band_boundaries() {
        assert_eq!(band(0.05), Band::Proper);
        assert_eq!(band(0.10), Band::Suitable);
        assert_eq!(band(0.15), Band::Suitable);
        assert_eq!(band(0.20), Band::Acceptable);
        assert_eq!(band(0.50), Band::Acceptable);
        assert_eq!(band(0.60), Band::Inappropriate);
    }

    #[test]
    fn ordinal_values_collapse_bins() {
        let v: Vec<f64> = (0..200).map(|i| (i % 3) as f64).collect();
        let b = quantile_bins(&v, 16);
        assert_eq!(b.iter().max(), Some(&2));
    }

    #[test]
    fn self_information_is_entropy() {
        let x: Vec<f64> = (0..320).map(|i| ((i * 37) % 101) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = mi_matrix(&[(Kqi::LatencyMs, &x), (Kqi::FrameRateFps, &y)], 16).unwrap();
        assert!((m.values[(0, 1)] - m.values[(0, 0)]).abs() < 1e-12);
        assert!((m.values[(0, 0)] - 4.0).abs() < 0.01);
    }

    #[test]
    fn constant_column_has_zero_information() {
        let x: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let c = alloc::vec![5.0; 200];
        let m = mi_matrix(&[(Kqi::LatencyMs, &x), (Kqi::AvgStallMs, &c)], 16).unwrap();
        assert_eq!(m.values[(1, 1)], 0.0);
        assert_eq!(m.values[(0, 1)], 0.0);
    }
}
