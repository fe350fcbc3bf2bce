//! Output layout and config-stamped JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use kqi_core::features::Strategy;
use kqi_core::regressors::Family;
use kqi_core::schema::Kqi;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity shared by every artifact of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub seed: u64,
    pub data: T,
}

impl<T> Stamped<T> {
    pub fn stamp(&self) -> Stamp {
        Stamp { config_hash: self.config_hash.clone(), seed: self.seed }
    }
}

pub fn write_json<T: Serialize>(path: &Path, stamp: &Stamp, data: &T) -> Result<()> {
    let doc = Stamped { config_hash: stamp.config_hash.clone(), seed: stamp.seed, data };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Stamped<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// File names under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Layout {
        Layout { root: root.into() }
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.csv")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.root.join("prepared")
    }

    pub fn prepared(&self, name: &str) -> PathBuf {
        self.prepared_dir().join(name)
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn cv_dir(&self) -> PathBuf {
        self.root.join("cv_tables")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.reports_dir().join(name)
    }

    pub fn stem(kqi: Kqi, strategy: Strategy, family: Family) -> String {
        format!("{}__{}__{}", kqi.name(), strategy.cli_name(), family.as_str().to_lowercase())
    }

    pub fn model(&self, kqi: Kqi, strategy: Strategy, family: Family) -> PathBuf {
        self.models_dir().join(format!("{}.json", Self::stem(kqi, strategy, family)))
    }

    pub fn cv_table(&self, kqi: Kqi, strategy: Strategy, family: Family) -> PathBuf {
        self.cv_dir().join(format!("{}.csv", Self::stem(kqi, strategy, family)))
    }
}
