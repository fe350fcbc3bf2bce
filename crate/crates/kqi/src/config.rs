//! Run configuration: TOML file, command-line overrides and the config hash.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use kqi_core::features::Strategy;
use kqi_core::preprocess::CleanConfig;
use kqi_core::regressors::Family;
use kqi_core::schema::{Granularity, Kqi};
use kqi_core::simulator::SimulatorParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Keys accepted in the TOML config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub granularity: Option<String>,
    pub strategies: Option<Vec<String>>,
    pub families: Option<Vec<String>>,
    pub kqis: Option<Vec<String>>,
    pub experiments: Option<usize>,
    pub standardize_target: Option<bool>,
    pub train_fraction: Option<f64>,
    pub mi_bins: Option<usize>,
    pub ptime_repeats: Option<usize>,
    pub simulator: Option<SimulatorParams>,
    pub clean: Option<CleanConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format(path, e))
    }

    /// Keys set in `other` replace those set here.
    pub fn overlay(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
            workers: other.workers.or(self.workers),
            granularity: other.granularity.or(self.granularity),
            strategies: other.strategies.or(self.strategies),
            families: other.families.or(self.families),
            kqis: other.kqis.or(self.kqis),
            experiments: other.experiments.or(self.experiments),
            standardize_target: other.standardize_target.or(self.standardize_target),
            train_fraction: other.train_fraction.or(self.train_fraction),
            mi_bins: other.mi_bins.or(self.mi_bins),
            ptime_repeats: other.ptime_repeats.or(self.ptime_repeats),
            simulator: other.simulator.or(self.simulator),
            clean: other.clean.or(self.clean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub granularity: Granularity,
    pub strategies: Vec<Strategy>,
    pub families: Vec<Family>,
    pub kqis: Vec<Kqi>,
    /// Experiments per scenario configuration.
    pub experiments: usize,
    pub standardize_target: bool,
    pub train_fraction: f64,
    pub mi_bins: usize,
    pub ptime_repeats: usize,
    pub simulator: SimulatorParams,
    pub clean: CleanConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out: PathBuf::from("out"),
            workers: 1,
            granularity: Granularity::PerSession,
            strategies: Strategy::ALL.to_vec(),
            families: Family::ALL.to_vec(),
            kqis: Kqi::ALL.to_vec(),
            experiments: 60,
            standardize_target: false,
            train_fraction: 0.7,
            mi_bins: kqi_core::evaluation::DEFAULT_BINS,
            ptime_repeats: 10,
            simulator: SimulatorParams::default(),
            clean: CleanConfig::default(),
        }
    }
}

fn parse_list<T: FromStr<Err = kqi_core::Error> + PartialEq>(key: &str, items: &[String]) -> Result<Vec<T>> {
    if items.is_empty() {
        return Err(kqi_core::Error::Config(format!("{key} must not be empty")).into());
    }
    let mut out: Vec<T> = Vec::new();
    for s in items {
        let v = T::from_str(s.trim())?;
        if out.contains(&v) {
            return Err(kqi_core::Error::Config(format!("{key} lists {s:?} twice")).into());
        }
        out.push(v);
    }
    Ok(out)
}

/// Splits a comma-separated flag value.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

impl RunConfig {
    pub fn resolve(file: ConfigFile) -> Result<RunConfig> {
        let d = RunConfig::default();
        let cfg = RunConfig {
            seed: file.seed.unwrap_or(d.seed),
            out: file.out.unwrap_or(d.out),
            workers: file.workers.unwrap_or(d.workers),
            granularity: match file.granularity {
                Some(g) => g.parse()?,
                None => d.granularity,
            },
            strategies: file.strategies.map_or(Ok(d.strategies), |v| parse_list("strategies", &v))?,
            families: file.families.map_or(Ok(d.families), |v| parse_list("families", &v))?,
            kqis: file.kqis.map_or(Ok(d.kqis), |v| parse_list("kqis", &v))?,
            experiments: file.experiments.unwrap_or(d.experiments),
            standardize_target: file.standardize_target.unwrap_or(d.standardize_target),
            train_fraction: file.train_fraction.unwrap_or(d.train_fraction),
            mi_bins: file.mi_bins.unwrap_or(d.mi_bins),
            ptime_repeats: file.ptime_repeats.unwrap_or(d.ptime_repeats),
            simulator: file.simulator.unwrap_or(d.simulator),
            clean: file.clean.unwrap_or(d.clean),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(kqi_core::Error::Config(m.to_string()).into());
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        if self.experiments == 0 {
            return bad("experiments must be >= 1");
        }
        if self.strategies.is_empty() || self.families.is_empty() || self.kqis.is_empty() {
            return bad("strategies, families and kqis must be non-empty");
        }
        if self.mi_bins < 2 {
            return bad("mi_bins must be >= 2");
        }
        if self.ptime_repeats == 0 {
            return bad("ptime_repeats must be >= 1");
        }
        self.simulator.validate()?;
        kqi_core::preprocess::SplitSpec { train_fraction: self.train_fraction, seed: 0 }.validate()?;
        Ok(())
    }

    /// SHA-256 over every setting that can change an artifact's content;
    /// the worker count and output directory are excluded.
    pub fn hash(&self) -> String {
        let mut view = serde_json::to_value(self).expect("config serializes");
        let obj = view.as_object_mut().expect("struct");
        obj.remove("out");
        obj.remove("workers");
        let bytes = serde_json::to_vec(&view).expect("value serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
