//! Fitted chains: scaler, feature strategy, optional target scaling, model.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FittedTransform, Strategy};
use crate::linalg::{mean, variance, Matrix};
use crate::preprocess::ScalerParams;
use crate::regressors::{Family, TrainedModel};
use crate::rng::{derive_seed, label};
use crate::schema::{Kqi, TrainSet};
use crate::selection::{grid_search, Clock, CvPlan, GridResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaler {
    pub fn fit(y: &[f64]) -> TargetScaler {
        let s = libm::sqrt(variance(y));
        TargetScaler { mean: mean(y), std: if s > 0.0 { s } else { 1.0 } }
    }

    pub fn forward(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|v| v * self.std + self.mean).collect()
    }
}

/// Training inputs after a strategy has been fitted.
pub struct StrategyFit {
    pub transform: FittedTransform,
    pub train: TrainSet,
    /// Target the models are fitted to (standardized when `target_scaler` is set).
    pub y: Vec<f64>,
    pub target_scaler: Option<TargetScaler>,
}

/// Seed for everything fitted for one (KQI, strategy, family) combination.
pub fn stage_seed(master_seed: u64, stage: &str, kqi: Kqi, strategy: Strategy, family: Option<Family>) -> u64 {
    let fam = family.map_or(u64::MAX, |f| f as u64);
    derive_seed(master_seed, &[label(stage), kqi as u64, strategy as u64, fam])
}

/// Fits the feature strategy on the standardized training split.
pub fn fit_strategy(strategy: Strategy, scaled: &TrainSet, kqi: Kqi, master_seed: u64, standardize_target: bool) -> Result<StrategyFit> {
    let y_raw = scaled.target(kqi)?;
    let transform = FittedTransform::fit(strategy, scaled, y_raw, stage_seed(master_seed, "strategy", kqi, strategy, None))?;
    let x = transform.apply(&scaled.x)?;
    let train = scaled.map_features(transform.output_names(), x);
    let target_scaler = standardize_target.then(|| TargetScaler::fit(y_raw));
    let y = match &target_scaler {
        Some(t) => t.forward(y_raw),
        None => y_raw.to_vec(),
    };
    Ok(StrategyFit { transform, train, y, target_scaler })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelChain {
    pub kqi: Kqi,
    pub strategy: Strategy,
    pub scaler: ScalerParams,
    pub transform: FittedTransform,
    pub target_scaler: Option<TargetScaler>,
    pub model: TrainedModel,
}

impl ModelChain {
    /// Predictions in natural target units from unscaled features.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let z = self.scaler.transform(x)?;
        let f = self.transform.apply(&z)?;
        let p = self.model.predict(&f)?;
        Ok(match &self.target_scaler {
            Some(t) => t.inverse(&p),
            None => p,
        })
    }
}

/// Strategy fit, serial grid search and refit for one family.
#[allow(clippy::too_many_arguments)]
pub fn train_family(
    kqi: Kqi,
    strategy: Strategy,
    family: Family,
    scaler: &ScalerParams,
    scaled: &TrainSet,
    plan: &CvPlan,
    master_seed: u64,
    standardize_target: bool,
    clock: &dyn Clock,
) -> Result<(ModelChain, GridResult)> {
    if scaled.feature_names != scaler.feature_names {
        return Err(Error::schema("training features differ from the scaler's"));
    }
    let sf = fit_strategy(strategy, scaled, kqi, master_seed, standardize_target)?;
    let grid = crate::regressors::grid(family);
    let result = grid_search(&grid, &sf.train, &sf.y, plan, stage_seed(master_seed, "grid", kqi, strategy, Some(family)), clock)?;
    let chain = ModelChain {
        kqi,
        strategy,
        scaler: scaler.clone(),
        transform: sf.transform,
        target_scaler: sf.target_scaler,
        model: result.model.clone(),
    };
    Ok((chain, result))
}
