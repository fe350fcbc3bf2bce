#[path = "common/oracles.rs"]
mod oracles;

use oracles::*;
use kqi_core::regressors::knn::KNeighbors;
use kqi_core::regressors::mlp::{flat_grad, Mlp};
use kqi_core::regressors::svr::kernel_matrix;
use kqi_core::regressors::{Kernel, KernelKind, Ridge, Svr, SvrParams, KNR_LEAF_SIZE, KNR_N_NEIGHBORS, KNR_P, RR_ALPHA, RR_FIT_INTERCEPT};
use kqi_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    Matrix::from_vec(n, d, (0..n * d).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn dense(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.to_vec()).collect()
}

#[test]
fn ridge_matches_gradient_descent_over_the_alpha_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let x = gaussian(&mut rng, 50, 5);
        let w: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x.row_iter().map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 1.5 + rng.random_range(-0.5..0.5)).collect();
        for &alpha in &RR_ALPHA {
            for &fi in &RR_FIT_INTERCEPT {
                let fast = Ridge::fit(&x, &y, alpha, fi).unwrap();
                let (w_ref, b_ref) = ridge_gd(&x, &y, alpha, fi);
                for (a, b) in fast.coef.iter().zip(&w_ref) {
                    assert!((a - b).abs() < 1e-6, "alpha {alpha}: {a} vs {b}");
                }
                assert!((fast.intercept - b_ref).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn ridge_recovers_a_line() {
    let x = Matrix::from_vec(20, 1, (0..20).map(|i| i as f64 * 0.25).collect()).unwrap();
    let y: Vec<f64> = (0..20).map(|i| 2.0 * (i as f64 * 0.25) + 1.0).collect();
    let r = Ridge::fit(&x, &y, 1e-5, true).unwrap();
    assert!((r.coef[0] - 2.0).abs() < 1e-4 && (r.intercept - 1.0).abs() < 1e-4);
}

#[test]
fn kd_tree_matches_exhaustive_scan_for_every_knr_cell() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = gaussian(&mut rng, 300, 4);
    let y: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..10.0)).collect();
    let q = gaussian(&mut rng, 200, 4);
    for &k in &KNR_N_NEIGHBORS {
        for &p in &KNR_P {
            let expected: Vec<f64> = q.row_iter().map(|r| knn_scan(&x, &y, r, k, p as f64)).collect();
            for &leaf in &KNR_LEAF_SIZE {
                let got = KNeighbors::fit(&x, &y, k, p as f64, leaf).unwrap().predict(&q);
                for (a, b) in got.iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-12, "k={k} p={p} leaf={leaf}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let x = Matrix::from_rows(&[[0.2, -1.0, 0.4], [1.1, 0.3, -0.2], [-0.6, 0.9, 0.0], [0.05, 0.15, 1.2], [1.7, -0.4, -0.9]]).unwrap();
    let y = [0.7, -1.2, 0.3, 2.2, -0.1];
    let mut net = Mlp::init(3, &[6, 4], 19);
    let g = flat_grad(&net.loss_grad(&x, &y, 0.003).1);
    let theta = net.flat();
    let h = 1e-6;
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] += h;
        net.set_flat(&t);
        let up = net.loss_grad(&x, &y, 0.003).0;
        t[k] -= 2.0 * h;
        net.set_flat(&t);
        let down = net.loss_grad(&x, &y, 0.003).0;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-7);
        assert!(rel < 1e-4 || (fd - g[k]).abs() < 1e-9, "parameter {k}: {fd} vs {}", g[k]);
    }
}

fn svr_problem(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..6.0)).collect();
    let y = xs.iter().map(|v| v.sin() + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
    (Matrix::from_vec(n, 1, xs).unwrap(), y)
}

#[test]
fn smo_matches_dense_qp_on_30_points() {
    let (x, y) = svr_problem(30, 3);
    for (c, eps) in [(1.0, 0.1), (10.0, 0.01), (100.0, 0.5)] {
        let kernel = Kernel::scaled(KernelKind::Rbf, 3, &x);
        let svr = Svr::fit(&x, &y, &SvrParams::new(kernel, c, eps));
        let k = dense(&kernel_matrix(&kernel, &x));
        let (_, f_ref) = svr_qp(&k, &y, eps, c, 200_000);
        assert!(svr.converged && svr.kkt_residual < 1e-3, "kkt {}", svr.kkt_residual);
        assert!((svr.objective - f_ref).abs() < 1e-2, "C={c}: {} vs {f_ref}", svr.objective);
        let own = svr_dual_objective(&k, &y, eps, &svr.alpha);
        assert!((own - svr.objective).abs() < 1e-8);
    }
}

#[test]
fn svr_fits_a_sine() {
    let (x, y) = svr_problem(50, 4);
    let kernel = Kernel::scaled(KernelKind::Rbf, 3, &x);
    let svr = Svr::fit(&x, &y, &SvrParams::new(kernel, 100.0, 0.01));
    let k = dense(&kernel_matrix(&kernel, &x));
    let (_, f_ref) = svr_qp(&k, &y, 0.01, 100.0, 300_000);
    assert!((svr.objective - f_ref).abs() < 1e-2, "{} vs {f_ref}", svr.objective);
    let grid: Vec<f64> = (0..100).map(|i| 0.1 + i as f64 * 0.058).collect();
    let xt = Matrix::from_vec(100, 1, grid.clone()).unwrap();
    let pred = svr.predict(&xt);
    let mae = grid.iter().zip(&pred).map(|(g, p)| (g.sin() - p).abs()).sum::<f64>() / 100.0;
    assert!(mae < 0.1, "{mae}");
}
