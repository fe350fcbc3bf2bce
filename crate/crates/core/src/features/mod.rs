//! Feature strategies: raw standardized features, importance-based selection,
//! and principal-component extraction.

pub mod pca;
pub mod selector;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::schema::TrainSet;

pub use pca::{fit_pca, PcaModel};
pub use selector::{fit_selector, SelectorModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "No_FE")]
    NoFe,
    #[serde(rename = "FS")]
    Fs,
    #[serde(rename = "FE")]
    Fe,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::NoFe, Strategy::Fs, Strategy::Fe];

    /// Report label.
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::NoFe => "No_FE",
            Strategy::Fs => "FS",
            Strategy::Fe => "FE",
        }
    }

    /// Command-line name.
    pub fn cli_name(self) -> &'static str {
        match self {
            Strategy::NoFe => "none",
            Strategy::Fs => "fs",
            Strategy::Fe => "fe",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|st| st.cli_name().eq_ignore_ascii_case(s) || st.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown strategy {s:?}")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FittedTransform {
    Identity { feature_names: Vec<String> },
    Select(SelectorModel),
    Pca(PcaModel),
}

impl FittedTransform {
    /// Fits the strategy on the training split; `y` is only used by selection.
    pub fn fit(strategy: Strategy, train: &TrainSet, y: &[f64], seed: u64) -> Result<FittedTransform> {
        Ok(match strategy {
            Strategy::NoFe => FittedTransform::Identity { feature_names: train.feature_names.clone() },
            Strategy::Fs => FittedTransform::Select(fit_selector(train, y, seed)?),
            Strategy::Fe => FittedTransform::Pca(fit_pca(train)?),
        })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            FittedTransform::Identity { feature_names } => {
                if x.cols() != feature_names.len() {
                    return Err(Error::Dimension { expected: feature_names.len(), actual: x.cols() });
                }
                Ok(x.clone())
            }
            FittedTransform::Select(m) => m.apply(x),
            FittedTransform::Pca(m) => m.apply(x),
        }
    }

    pub fn output_names(&self) -> Vec<String> {
        match self {
            FittedTransform::Identity { feature_names } => feature_names.clone(),
            FittedTransform::Select(m) => m.selected_names(),
            FittedTransform::Pca(m) => m.output_names(),
        }
    }
}
