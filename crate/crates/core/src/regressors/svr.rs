//! ε-insensitive support vector regression.
//!
//! The dual is written over `2n` variables in the usual way: the first `n`
//! carry label `+1` and linear term `ε - y_i`, the second `n` carry label `-1`
//! and linear term `ε + y_i`. Pairs are chosen with second-order working-set
//! selection and solved analytically.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};

const TAU: f64 = 1e-12;
/// Above this many training rows the kernel is computed on demand through a row cache.
const DENSE_LIMIT: usize = 4000;
const CACHE_ROWS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Poly,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Poly => "poly",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
}

impl Kernel {
    /// `gamma = 1 / (d * var(X))` over every entry of `x`, or 1 for constant input.
    pub fn scaled(kind: KernelKind, degree: u32, x: &Matrix) -> Kernel {
        let v = crate::linalg::variance(x.as_slice());
        let gamma = if v > 0.0 && x.cols() > 0 { 1.0 / (x.cols() as f64 * v) } else { 1.0 };
        Kernel { kind, degree, gamma, coef0: 0.0 }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Poly => powi(self.gamma * dot(a, b) + self.coef0, self.degree),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                libm::exp(-self.gamma * d2)
            }
            KernelKind::Sigmoid => libm::tanh(self.gamma * dot(a, b) + self.coef0),
        }
    }
}

fn powi(mut base: f64, mut e: u32) -> f64 {
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Full `n x n` Gram matrix.
pub fn kernel_matrix(kernel: &Kernel, x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(x.row(i), x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

enum Gram<'a> {
    Dense(Matrix),
    Cached { x: &'a Matrix, kernel: Kernel, slots: VecDeque<(usize, Vec<f64>)> },
}

impl Gram<'_> {
    fn row(&mut self, u: usize) -> &[f64] {
        match self {
            Gram::Dense(m) => m.row(u),
            Gram::Cached { x, kernel, slots } => {
                if let Some(pos) = slots.iter().position(|(k, _)| *k == u) {
                    let hit = slots.remove(pos).expect("position is valid");
                    slots.push_back(hit);
                } else {
                    if slots.len() == CACHE_ROWS {
                        slots.pop_front();
                    }
                    let row = x.row_iter().map(|r| kernel.eval(x.row(u), r)).collect();
                    slots.push_back((u, row));
                }
                &slots.back().expect("just pushed").1
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvrParams {
    pub fn new(kernel: Kernel, c: f64, epsilon: f64) -> SvrParams {
        SvrParams { kernel, c, epsilon, tol: 1e-3, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svr {
    pub kernel: Kernel,
    support: Matrix,
    coef: Vec<f64>,
    rho: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Maximal KKT violation at termination.
    pub kkt_residual: f64,
    /// Dual objective `1/2 a'Qa + p'a` at termination.
    pub objective: f64,
    /// All `2n` dual variables.
    pub alpha: Vec<f64>,
}

impl Svr {
    pub fn fit(x: &Matrix, y: &[f64], params: &SvrParams) -> Svr {
        let n = x.rows();
        let l = 2 * n;
        let c = params.c;
        let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
        let p: Vec<f64> = (0..l).map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] }).collect();
        let mut gram = if n <= DENSE_LIMIT {
            Gram::Dense(kernel_matrix(&params.kernel, x))
        } else {
            Gram::Cached { x, kernel: params.kernel, slots: VecDeque::with_capacity(CACHE_ROWS) }
        };
        let qd: Vec<f64> = (0..n).map(|u| params.kernel.eval(x.row(u), x.row(u))).collect();
        let ys: Vec<f64> = (0..l).map(sign).collect();
        let qd2 = [qd.as_slice(), qd.as_slice()].concat();
        let mut alpha = vec![0.0; l];
        let mut g = p.clone();
        let mut ki = vec![0.0; l];

        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        while iterations < params.max_iter {
            // maximal violator in I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..l {
                let up = if ys[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
                if up && -ys[t] * g[t] >= gmax {
                    gmax = -ys[t] * g[t];
                    i = t;
                }
            }
            if i == usize::MAX {
                residual = 0.0;
                break;
            }
            let ui = i % n;
            let yi = ys[i];
            {
                let row = gram.row(ui);
                ki[..n].copy_from_slice(row);
                ki[n..].copy_from_slice(row);
            }

            let mut gmax2 = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..l {
                let yt = ys[t];
                let low = if yt > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
                if !low {
                    continue;
                }
                let v = yt * g[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = qd[ui] + qd2[t] - 2.0 * ki[t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(diff * diff) / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
            residual = gmax + gmax2;
            if residual < params.tol || j == usize::MAX {
                break;
            }
            iterations += 1;

            let uj = j % n;
            let yj = ys[j];
            let kij = ki[uj];
            let (old_i, old_j) = (alpha[i], alpha[j]);
            if yi != yj {
                let mut quad = qd[ui] + qd[uj] + 2.0 * (yi * yj * kij);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-g[i] - g[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let mut quad = qd[ui] + qd[uj] - 2.0 * (yi * yj * kij);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (g[i] - g[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let di = alpha[i] - old_i;
            let dj = alpha[j] - old_j;
            let kj = gram.row(uj);
            let (gp, gm) = g.split_at_mut(n);
            for ((gt, &a), &b) in gp.iter_mut().zip(&ki[..n]).zip(kj) {
                *gt += yi * a * di + yj * b * dj;
            }
            for ((gt, &a), &b) in gm.iter_mut().zip(&ki[..n]).zip(kj) {
                *gt += -(yi * a * di + yj * b * dj);
            }
        }
        let converged = residual < params.tol;

        // bias from free variables, midpoint of the feasible interval otherwise
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..l {
            let yt = sign(t);
            let yg = yt * g[t];
            if alpha[t] >= c {
                if yt < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= 0.0 {
                if yt > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        let rho = if free > 0 { sum_free / free as f64 } else { 0.5 * (ub + lb) };
        let objective = 0.5 * alpha.iter().zip(&g).zip(&p).map(|((a, gi), pi)| a * (gi + pi)).sum::<f64>();

        let mut keep = Vec::new();
        let mut coef = Vec::new();
        for u in 0..n {
            let w = alpha[u] - alpha[u + n];
            if w != 0.0 {
                keep.push(u);
                coef.push(w);
            }
        }
        Svr {
            kernel: params.kernel,
            support: x.select_rows(&keep),
            coef,
            rho,
            converged,
            iterations,
            kkt_residual: residual,
            objective,
            alpha,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter()
            .map(|r| {
                self.support.row_iter().zip(&self.coef).map(|(s, w)| w * self.kernel.eval(s, r)).sum::<f64>() - self.rho
            })
            .collect()
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
        let y = xs.iter().map(|&v| libm::sin(v)).collect();
        (Matrix::from_vec(n, 1, xs).unwrap(), y)
    }

    #[test]
    fn rbf_fits_a_sine() {
        let (x, y) = sine(50);
        let k = Kernel::scaled(KernelKind::Rbf, 3, &x);
        let m = Svr::fit(&x, &y, &SvrParams::new(k, 100.0, 0.01));
        assert!(m.converged);
        let pred = m.predict(&x);
        let mae = pred.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / 50.0;
        assert!(mae < 0.05, "mae {mae}");
    }

    #[test]
    fn constant_target_within_epsilon() {
        let (x, _) = sine(20);
        let y = vec![4.0; 20];
        let k = Kernel::scaled(KernelKind::Rbf, 3, &x);
        let m = Svr::fit(&x, &y, &SvrParams::new(k, 1.0, 0.1));
        for p in m.predict(&x) {
            assert!((p - 4.0).abs() <= 0.1 + 1e-9);
        }
    }

    #[test]
    fn dual_stays_feasible() {
        let (x, y) = sine(30);
        let k = Kernel::scaled(KernelKind::Poly, 3, &x);
        let m = Svr::fit(&x, &y, &SvrParams::new(k, 10.0, 0.1));
        let n = 30;
        let balance: f64 = (0..n).map(|u| m.alpha[u] - m.alpha[u + n]).sum();
        assert!(balance.abs() < 1e-9);
        assert!(m.alpha.iter().all(|&a| (0.0..=10.0).contains(&a)));
    }

    #[test]
    fn powi_matches_repeated_product() {
        assert_eq!(powi(1.5, 0), 1.0);
        assert_eq!(powi(2.0, 7), 128.0);
        assert_eq!(powi(-1.0, 3), -1.0);
    }
}
