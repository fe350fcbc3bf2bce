//! Exhaustive grid search scored by k-fold cross-validated MAE.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::mae;
use crate::linalg::Matrix;
use crate::regressors::{fit, EstimatorSpec, Family, Hyperparameters, TrainedModel};
use crate::rng::{derive_seed, label, rng_from};
use crate::schema::TrainSet;

pub const N_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_folds: usize,
    /// Fold id of every training row.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

pub fn make_folds(n: usize, seed: u64) -> Result<CvPlan> {
    if n < N_FOLDS {
        return Err(Error::empty(format!("{N_FOLDS}-fold cross-validation needs at least {N_FOLDS} rows, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from(seed, &[label("folds")]));
    let mut assignment = alloc::vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        assignment[i] = pos % N_FOLDS;
    }
    Ok(CvPlan { n_folds: N_FOLDS, assignment, seed })
}

impl CvPlan {
    /// `(fit rows, held-out rows)` for fold `f`, both ascending.
    pub fn fold(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignment.len()).partition(|&i| self.assignment[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = alloc::vec![0; self.n_folds];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }
}

/// Source of wall-clock readings in seconds; the core itself never reads time.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Reports every fit as instantaneous.
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: usize,
    pub hyperparameters: Hyperparameters,
    pub fold_mae: Vec<f64>,
    /// `+inf` when any fold failed or did not converge.
    pub mean_mae: f64,
    pub mean_fit_time_s: f64,
    pub converged: bool,
    pub error: Option<String>,
    /// Earlier cell whose results were reused because it trains identical models.
    pub reused_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: Family,
    pub cells: Vec<CellRecord>,
    pub best_cell: usize,
    pub model: TrainedModel,
}

pub fn cell_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, &[index as u64])
}

/// For every cell, the first cell with the same canonical hyperparameters.
pub fn representatives(grid: &[Hyperparameters]) -> Vec<usize> {
    let canon: Vec<Hyperparameters> = grid.iter().map(Hyperparameters::canonical).collect();
    (0..grid.len()).map(|i| canon.iter().position(|c| *c == canon[i]).expect("self is present")).collect()
}

/// Cross-validates one cell.
pub fn evaluate_cell(
    index: usize,
    hp: &Hyperparameters,
    x: &Matrix,
    y: &[f64],
    plan: &CvPlan,
    master_seed: u64,
    clock: &dyn Clock,
) -> CellRecord {
    let mut fold_mae = Vec::with_capacity(plan.n_folds);
    let mut time = 0.0;
    let mut converged = true;
    let mut error = None;
    let spec = EstimatorSpec { hyperparameters: hp.clone(), seed: cell_seed(master_seed, index) };
    for f in 0..plan.n_folds {
        let (fit_rows, held) = plan.fold(f);
        let xf = x.select_rows(&fit_rows);
        let yf: Vec<f64> = fit_rows.iter().map(|&i| y[i]).collect();
        let start = clock.now();
        let model = fit(&spec, &xf, &yf);
        time += clock.now() - start;
        let score = match model {
            Ok(m) => {
                converged &= m.converged();
                let xv = x.select_rows(&held);
                let yv: Vec<f64> = held.iter().map(|&i| y[i]).collect();
                match m.predict(&xv) {
                    Ok(p) if p.iter().all(|v| v.is_finite()) => mae(&yv, &p).unwrap_or(f64::INFINITY),
                    Ok(_) => {
                        error.get_or_insert_with(|| "non-finite predictions".to_string());
                        f64::INFINITY
                    }
                    Err(e) => {
                        error.get_or_insert_with(|| e.to_string());
                        f64::INFINITY
                    }
                }
            }
            Err(e) => {
                error.get_or_insert_with(|| e.to_string());
                f64::INFINITY
            }
        };
        fold_mae.push(score);
    }
    let mean_mae = if converged && error.is_none() {
        fold_mae.iter().sum::<f64>() / fold_mae.len() as f64
    } else {
        f64::INFINITY
    };
    CellRecord {
        index,
        hyperparameters: hp.clone(),
        fold_mae,
        mean_mae,
        mean_fit_time_s: time / plan.n_folds as f64,
        converged,
        error,
        reused_from: None,
    }
}

/// Record for a cell that shares its models with cell `rep`.
pub fn reuse_cell(index: usize, hp: &Hyperparameters, rep: &CellRecord) -> CellRecord {
    CellRecord { index, hyperparameters: hp.clone(), reused_from: Some(rep.index), ..rep.clone() }
}

/// Lowest mean MAE, earliest cell on ties.
pub fn best_cell(cells: &[CellRecord]) -> usize {
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.mean_mae < cells[best].mean_mae {
            best = i;
        }
    }
    best
}

/// Picks the best cell and refits it on all training rows.
pub fn finish(family: Family, cells: Vec<CellRecord>, x: &Matrix, y: &[f64], master_seed: u64) -> Result<GridResult> {
    if cells.is_empty() {
        return Err(Error::empty("grid has no cells"));
    }
    let best = best_cell(&cells);
    let spec = EstimatorSpec { hyperparameters: cells[best].hyperparameters.clone(), seed: cell_seed(master_seed, best) };
    let model = fit(&spec, x, y)?;
    Ok(GridResult { family, cells, best_cell: best, model })
}

/// Serial grid search over `grid` on the (already transformed) training split.
pub fn grid_search(
    grid: &[Hyperparameters],
    train: &TrainSet,
    y: &[f64],
    plan: &CvPlan,
    master_seed: u64,
    clock: &dyn Clock,
) -> Result<GridResult> {
    let first = grid.first().ok_or_else(|| Error::empty("grid has no cells"))?;
    let family = first.family();
    if let Some(h) = grid.iter().find(|h| h.family() != family) {
        return Err(Error::config(format!("grid mixes {family} and {} cells", h.family())));
    }
    check_plan(train, y, plan)?;
    let reps = representatives(grid);
    let mut cells: Vec<CellRecord> = Vec::with_capacity(grid.len());
    for (i, hp) in grid.iter().enumerate() {
        let rec = if reps[i] == i {
            evaluate_cell(i, hp, &train.x, y, plan, master_seed, clock)
        } else {
            reuse_cell(i, hp, &cells[reps[i]])
        };
        cells.push(rec);
    }
    finish(family, cells, &train.x, y, master_seed)
}

pub fn check_plan(train: &TrainSet, y: &[f64], plan: &CvPlan) -> Result<()> {
    if y.len() != train.n_rows() {
        return Err(Error::Dimension { expected: train.n_rows(), actual: y.len() });
    }
    if plan.assignment.len() != train.n_rows() {
        return Err(Error::Dimension { expected: train.n_rows(), actual: plan.assignment.len() });
    }
    Ok(())
}
