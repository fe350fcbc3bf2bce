//! Algorithmic core of the KQI estimation toolkit.
//!
//! Everything in this crate is `no_std` + `alloc`: the campaign simulator,
//! preprocessing, feature strategies, the six regressor families, grid search
//! with cross-validation and the evaluation metrics. File formats, timing,
//! parallel execution and the command line live in the `kqi` companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod pipeline;
pub mod preprocess;
pub mod regressors;
pub mod rng;
pub mod schema;
pub mod selection;
pub mod simulator;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use schema::{
    DatasetMatrix, FeaturePolicy, Granularity, Kqi, KpiVector, KqiVector, PowerScenario, Sample,
    ScenarioConfig, SessionRecord, SplitTag, Technology,
};
