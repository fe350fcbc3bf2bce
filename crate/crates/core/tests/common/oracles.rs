//! Slow, independent reference solvers used to check the fast implementations.

#![allow(dead_code)]

use kqi_core::Matrix;

fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power iteration.
pub fn lambda_max(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
    let mut lam = 0.0;
    for _ in 0..2000 {
        let w = matvec(a, &v);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        lam = nw / norm(&v);
        v = w.iter().map(|x| x / nw).collect();
    }
    lam
}

/// Ridge by gradient descent on `||y - Xw - b||^2 + alpha ||w||^2`.
pub fn ridge_gd(x: &Matrix, y: &[f64], alpha: f64, fit_intercept: bool) -> (Vec<f64>, f64) {
    let (n, d) = (x.rows(), x.cols());
    let m = d + usize::from(fit_intercept);
    let design = |i: usize, j: usize| if j < d { x[(i, j)] } else { 1.0 };
    let mut h = vec![vec![0.0; m]; m];
    for (j, row) in h.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            *cell = 2.0 * (0..n).map(|i| design(i, j) * design(i, k)).sum::<f64>();
        }
        if j < d {
            row[j] += 2.0 * alpha;
        }
    }
    let c: Vec<f64> = (0..m).map(|j| 2.0 * (0..n).map(|i| design(i, j) * y[i]).sum::<f64>()).collect();
    let stop = 1e-13 * norm(&c).max(1.0);
    let step = 1.0 / lambda_max(&h);
    let mut theta = vec![0.0; m];
    for _ in 0..2_000_000 {
        let g: Vec<f64> = matvec(&h, &theta).iter().zip(&c).map(|(a, b)| a - b).collect();
        if norm(&g) < stop {
            break;
        }
        for (t, gj) in theta.iter_mut().zip(&g) {
            *t -= step * gj;
        }
    }
    let b = if fit_intercept { theta[d] } else { 0.0 };
    theta.truncate(d);
    (theta, b)
}

/// Minkowski distance.
pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Uniform-weight k-NN prediction by exhaustive scan, ties broken by index.
pub fn knn_scan(x: &Matrix, y: &[f64], q: &[f64], k: usize, p: f64) -> f64 {
    let mut d: Vec<(f64, usize)> = (0..x.rows()).map(|i| (minkowski(x.row(i), q, p), i)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d[..k].iter().map(|&(_, i)| y[i]).sum::<f64>() / k as f64
}

/// Epsilon-SVR dual over `z = [alpha; alpha*]`:
/// `1/2 (a - a*)' K (a - a*) + eps sum(a + a*) - y'(a - a*)`.
pub fn svr_dual_objective(k: &[Vec<f64>], y: &[f64], eps: f64, z: &[f64]) -> f64 {
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
    let kb = matvec(k, &beta);
    0.5 * beta.iter().zip(&kb).map(|(a, b)| a * b).sum::<f64>() + eps * z.iter().sum::<f64>()
        - y.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
}

/// Projection onto `{0 <= z <= c, sum(z[..n]) = sum(z[n..])}` by bisection on the multiplier.
pub fn project_box_hyperplane(v: &[f64], n: usize, c: f64) -> Vec<f64> {
    let sign = |i: usize| if i < n { 1.0 } else { -1.0 };
    let at = |lam: f64| -> Vec<f64> { v.iter().enumerate().map(|(i, &x)| (x - lam * sign(i)).clamp(0.0, c)).collect() };
    let balance = |z: &[f64]| z.iter().enumerate().map(|(i, &x)| sign(i) * x).sum::<f64>();
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Dense QP oracle: accelerated projected gradient with adaptive restart.
pub fn svr_qp(k: &[Vec<f64>], y: &[f64], eps: f64, c: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let step = 1.0 / (2.0 * lambda_max(k)).max(1e-12);
    let grad = |z: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let kb = matvec(k, &beta);
        (0..2 * n).map(|i| if i < n { kb[i] + eps - y[i] } else { -kb[i - n] + eps + y[i - n] }).collect()
    };
    let mut z = vec![0.0; 2 * n];
    let mut w = z.clone();
    let mut t = 1.0f64;
    let mut prev = svr_dual_objective(k, y, eps, &z);
    for _ in 0..iters {
        let g = grad(&w);
        let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let next = project_box_hyperplane(&cand, n, c);
        let f = svr_dual_objective(k, y, eps, &next);
        if f > prev {
            t = 1.0;
            w = z.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        w = next.iter().zip(&z).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        z = next;
        t = t_next;
        prev = f;
    }
    let f = svr_dual_objective(k, y, eps, &z);
    (z, f)
}
