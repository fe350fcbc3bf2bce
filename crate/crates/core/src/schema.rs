//! Campaign, sample and session schema plus the named-column dataset matrix.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Seconds of playback per experiment.
pub const SESSION_SECONDS: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technology {
    #[serde(rename = "LTE")]
    Lte,
}

impl Technology {
    pub fn as_str(self) -> &'static str {
        match self {
            Technology::Lte => "LTE",
        }
    }

    fn code(self) -> f64 {
        0.0
    }
}

impl FromStr for Technology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LTE" => Ok(Technology::Lte),
            other => Err(Error::schema(format!("technology {other:?} not in {{LTE}}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Bandwidth {
    Mhz5,
    Mhz10,
    Mhz15,
    Mhz20,
}

impl Bandwidth {
    pub const ALL: [Bandwidth; 4] = [Bandwidth::Mhz5, Bandwidth::Mhz10, Bandwidth::Mhz15, Bandwidth::Mhz20];

    pub fn mhz(self) -> u32 {
        match self {
            Bandwidth::Mhz5 => 5,
            Bandwidth::Mhz10 => 10,
            Bandwidth::Mhz15 => 15,
            Bandwidth::Mhz20 => 20,
        }
    }
}

impl TryFrom<u32> for Bandwidth {
    type Error = Error;
    fn try_from(mhz: u32) -> Result<Self> {
        match mhz {
            5 => Ok(Bandwidth::Mhz5),
            10 => Ok(Bandwidth::Mhz10),
            15 => Ok(Bandwidth::Mhz15),
            20 => Ok(Bandwidth::Mhz20),
            _ => Err(Error::schema("bandwidth not in {5,10,15,20}")),
        }
    }
}

impl From<Bandwidth> for u32 {
    fn from(b: Bandwidth) -> u32 {
        b.mhz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PowerScenario {
    #[serde(rename = "MaxPT")]
    MaxPt,
    #[serde(rename = "MinPT")]
    MinPt,
    #[serde(rename = "RedPT_Noise")]
    RedPtNoise,
}

impl PowerScenario {
    pub const ALL: [PowerScenario; 3] = [PowerScenario::MaxPt, PowerScenario::MinPt, PowerScenario::RedPtNoise];

    pub fn as_str(self) -> &'static str {
        match self {
            PowerScenario::MaxPt => "MaxPT",
            PowerScenario::MinPt => "MinPT",
            PowerScenario::RedPtNoise => "RedPT_Noise",
        }
    }

    /// Crowdcell transmission attenuation and noise level, in dB.
    pub fn levels_db(self) -> (f64, f64) {
        match self {
            PowerScenario::MaxPt => (0.0, -30.0),
            PowerScenario::MinPt => (-10.0, -30.0),
            PowerScenario::RedPtNoise => (-20.0, -20.0),
        }
    }

    fn code(self) -> f64 {
        match self {
            PowerScenario::MaxPt => 0.0,
            PowerScenario::MinPt => 1.0,
            PowerScenario::RedPtNoise => 2.0,
        }
    }
}

impl FromStr for PowerScenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MaxPT" => Ok(PowerScenario::MaxPt),
            "MinPT" => Ok(PowerScenario::MinPt),
            "RedPT_Noise" => Ok(PowerScenario::RedPtNoise),
            other => Err(Error::schema(format!(
                "power_scenario {other:?} not in {{MaxPT,MinPT,RedPT_Noise}}"
            ))),
        }
    }
}

impl fmt::Display for PowerScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub technology: Technology,
    pub bandwidth: Bandwidth,
    pub power_scenario: PowerScenario,
    pub tx_power_db: f64,
    pub noise_db: f64,
}

impl ScenarioConfig {
    pub fn new(bandwidth: Bandwidth, power_scenario: PowerScenario) -> Self {
        let (tx_power_db, noise_db) = power_scenario.levels_db();
        ScenarioConfig { technology: Technology::Lte, bandwidth, power_scenario, tx_power_db, noise_db }
    }

    /// The twelve campaign configurations, bandwidth-major.
    pub fn campaign() -> Vec<ScenarioConfig> {
        Bandwidth::ALL
            .iter()
            .flat_map(|&b| PowerScenario::ALL.iter().map(move |&p| ScenarioConfig::new(b, p)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let (tx, noise) = self.power_scenario.levels_db();
        if self.tx_power_db != tx || self.noise_db != noise {
            return Err(Error::schema(format!(
                "{} requires tx_power_db={tx} and noise_db={noise}, got {} and {}",
                self.power_scenario, self.tx_power_db, self.noise_db
            )));
        }
        Ok(())
    }

    /// Stratum key used by the stratified split.
    pub fn stratum(&self) -> (Bandwidth, PowerScenario) {
        (self.bandwidth, self.power_scenario)
    }

    pub fn label(&self) -> String {
        format!("{}MHz/{}", self.bandwidth.mhz(), self.power_scenario)
    }

    fn values(&self) -> [f64; 5] {
        [
            self.technology.code(),
            self.bandwidth.mhz() as f64,
            self.power_scenario.code(),
            self.tx_power_db,
            self.noise_db,
        ]
    }
}

pub const CONFIG_COLUMNS: [&str; 5] = ["technology", "bandwidth_mhz", "power_scenario", "tx_power_db", "noise_db"];

pub const KPI_COLUMNS: [&str; 10] = [
    "dl_throughput_mbps",
    "ul_throughput_mbps",
    "dl_retx_count",
    "ul_retx_count",
    "sinr_db",
    "rsrp_dbm",
    "carrier_freq_mhz",
    "channel_util",
    "cpe_wifi_rssi_dbm",
    "cpe_link_rate_mbps",
];

pub const KQI_COLUMNS: [&str; 6] = [
    "resolution_level",
    "frame_rate_fps",
    "initial_startup_ms",
    "avg_stall_ms",
    "client_throughput_mbps",
    "latency_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KpiVector {
    pub dl_throughput_mbps: f64,
    pub ul_throughput_mbps: f64,
    pub dl_retx_count: u32,
    pub ul_retx_count: u32,
    pub sinr_db: f64,
    pub rsrp_dbm: f64,
    pub carrier_freq_mhz: f64,
    pub channel_util: f64,
    pub cpe_wifi_rssi_dbm: f64,
    pub cpe_link_rate_mbps: f64,
}

impl KpiVector {
    pub fn values(&self) -> [f64; 10] {
        [
            self.dl_throughput_mbps,
            self.ul_throughput_mbps,
            self.dl_retx_count as f64,
            self.ul_retx_count as f64,
            self.sinr_db,
            self.rsrp_dbm,
            self.carrier_freq_mhz,
            self.channel_util,
            self.cpe_wifi_rssi_dbm,
            self.cpe_link_rate_mbps,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KqiVector {
    pub resolution_level: u8,
    pub frame_rate_fps: f64,
    pub initial_startup_ms: f64,
    pub avg_stall_ms: f64,
    pub client_throughput_mbps: f64,
    pub latency_ms: f64,
}

impl KqiVector {
    pub fn values(&self) -> [f64; 6] {
        [
            self.resolution_level as f64,
            self.frame_rate_fps,
            self.initial_startup_ms,
            self.avg_stall_ms,
            self.client_throughput_mbps,
            self.latency_ms,
        ]
    }
}

/// Width x height shown for each resolution level; level 0 means nothing is displayed.
pub const RESOLUTIONS: [(u32, u32); 6] = [(0, 0), (720, 360), (1080, 540), (1440, 720), (2160, 1080), (3840, 1920)];

/// One per-second observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub experiment_id: u64,
    pub t_s: u32,
    pub config: ScenarioConfig,
    pub kpis: KpiVector,
    pub kqis: KqiVector,
}

impl Sample {
    /// Structural checks: enumerations, time index and scenario consistency.
    /// Numeric ranges are the cleaning stage's business.
    pub fn validate_schema(&self) -> Result<()> {
        self.config.validate()?;
        if self.t_s >= SESSION_SECONDS {
            return Err(Error::schema(format!("t_s {} outside [0,{}]", self.t_s, SESSION_SECONDS - 1)));
        }
        if self.kqis.resolution_level > 5 {
            return Err(Error::schema(format!("resolution_level {} not in 0..=5", self.kqis.resolution_level)));
        }
        Ok(())
    }
}

/// Per-experiment aggregate: KPI means, median resolution, mean of the other KQIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub experiment_id: u64,
    pub config: ScenarioConfig,
    pub n_samples: usize,
    pub kpis: [f64; 10],
    pub resolution_level: u8,
    pub frame_rate_fps: f64,
    pub initial_startup_ms: f64,
    pub avg_stall_ms: f64,
    pub client_throughput_mbps: f64,
    pub latency_ms: f64,
}

/// Anything that can become one row of a [`DatasetMatrix`].
pub trait Record {
    fn experiment_id(&self) -> u64;
    fn config(&self) -> &ScenarioConfig;
    fn kpi_values(&self) -> [f64; 10];
    fn kqi_values(&self) -> [f64; 6];
}

impl Record for Sample {
    fn experiment_id(&self) -> u64 {
        self.experiment_id
    }
    fn config(&self) -> &ScenarioConfig {
        &self.config
    }
    fn kpi_values(&self) -> [f64; 10] {
        self.kpis.values()
    }
    fn kqi_values(&self) -> [f64; 6] {
        self.kqis.values()
    }
}

impl Record for SessionRecord {
    fn experiment_id(&self) -> u64 {
        self.experiment_id
    }
    fn config(&self) -> &ScenarioConfig {
        &self.config
    }
    fn kpi_values(&self) -> [f64; 10] {
        self.kpis
    }
    fn kqi_values(&self) -> [f64; 6] {
        [
            self.resolution_level as f64,
            self.frame_rate_fps,
            self.initial_startup_ms,
            self.avg_stall_ms,
            self.client_throughput_mbps,
            self.latency_ms,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kqi {
    ResolutionLevel,
    FrameRateFps,
    InitialStartupMs,
    AvgStallMs,
    ClientThroughputMbps,
    LatencyMs,
}

impl Kqi {
    pub const ALL: [Kqi; 6] = [
        Kqi::ResolutionLevel,
        Kqi::FrameRateFps,
        Kqi::InitialStartupMs,
        Kqi::AvgStallMs,
        Kqi::ClientThroughputMbps,
        Kqi::LatencyMs,
    ];

    pub fn name(self) -> &'static str {
        KQI_COLUMNS[self.index()]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Kqi {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Kqi::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::schema(format!("unknown KQI {s:?}")))
    }
}

impl fmt::Display for Kqi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
    Unsplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerSample,
    PerSession,
}

impl FromStr for Granularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_sample" => Ok(Granularity::PerSample),
            "per_session" => Ok(Granularity::PerSession),
            other => Err(Error::config(format!("granularity {other:?} not in {{per_sample, per_session}}"))),
        }
    }
}

/// Which schema columns become features. KQIs are never admissible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturePolicy {
    columns: Vec<String>,
}

impl Default for FeaturePolicy {
    fn default() -> Self {
        FeaturePolicy {
            columns: CONFIG_COLUMNS.iter().chain(KPI_COLUMNS.iter()).map(|s| s.to_string()).collect(),
        }
    }
}

impl FeaturePolicy {
    pub fn kpis_only() -> Self {
        FeaturePolicy { columns: KPI_COLUMNS.iter().map(|s| s.to_string()).collect() }
    }

    /// Custom column subset; kept in schema order regardless of the order given.
    pub fn with_columns<S: AsRef<str>>(columns: &[S]) -> Result<Self> {
        for c in columns {
            let c = c.as_ref();
            if KQI_COLUMNS.contains(&c) {
                return Err(Error::schema(format!("KQI {c:?} cannot be used as a feature")));
            }
            if !CONFIG_COLUMNS.contains(&c) && !KPI_COLUMNS.contains(&c) {
                return Err(Error::schema(format!("unknown feature column {c:?}")));
            }
        }
        let columns = CONFIG_COLUMNS
            .iter()
            .chain(KPI_COLUMNS.iter())
            .filter(|name| columns.iter().any(|c| c.as_ref() == **name))
            .map(|s| s.to_string())
            .collect();
        Ok(FeaturePolicy { columns })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }
}

/// Named-column feature matrix with one target vector per KQI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMatrix {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub targets: BTreeMap<Kqi, Vec<f64>>,
    pub split_tag: SplitTag,
    pub granularity: Granularity,
    /// Source experiment of every row.
    pub experiment_ids: Vec<u64>,
}

impl DatasetMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn target(&self, kqi: Kqi) -> Result<&[f64]> {
        self.targets
            .get(&kqi)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::schema(format!("target {kqi} missing")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_names.len() != self.x.cols() {
            return Err(Error::Dimension { expected: self.x.cols(), actual: self.feature_names.len() });
        }
        if self.experiment_ids.len() != self.x.rows() {
            return Err(Error::Dimension { expected: self.x.rows(), actual: self.experiment_ids.len() });
        }
        for (k, v) in &self.targets {
            if v.len() != self.x.rows() {
                return Err(Error::schema(format!("target {k} has length {} for {} rows", v.len(), self.x.rows())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::schema(format!("target {k} has non-finite entries")));
            }
        }
        if !self.x.is_finite() {
            return Err(Error::schema("feature matrix has non-finite entries"));
        }
        Ok(())
    }

    /// Same matrix with a different split tag.
    pub fn with_tag(mut self, tag: SplitTag) -> Self {
        self.split_tag = tag;
        self
    }

    /// Rows whose experiment id is in `ids` (sorted ascending), in original order.
    pub fn filter_experiments(&self, ids: &[u64], tag: SplitTag) -> DatasetMatrix {
        let rows: Vec<usize> =
            (0..self.n_rows()).filter(|&i| ids.binary_search(&self.experiment_ids[i]).is_ok()).collect();
        self.select_rows(&rows, tag)
    }

    pub fn select_rows(&self, rows: &[usize], tag: SplitTag) -> DatasetMatrix {
        DatasetMatrix {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(rows),
            targets: self.targets.iter().map(|(k, v)| (*k, rows.iter().map(|&i| v[i]).collect())).collect(),
            split_tag: tag,
            granularity: self.granularity,
            experiment_ids: rows.iter().map(|&i| self.experiment_ids[i]).collect(),
        }
    }
}

/// Builds the feature matrix and all six target vectors.
pub fn to_matrix<R: Record>(records: &[R], policy: &FeaturePolicy, granularity: Granularity) -> Result<DatasetMatrix> {
    if records.is_empty() {
        return Err(Error::empty("no records to convert"));
    }
    // Re-validate: policies deserialized from config files bypass the constructor.
    let policy = FeaturePolicy::with_columns(policy.columns())?;
    if policy.columns.is_empty() {
        return Err(Error::schema("feature policy selects no columns"));
    }
    let picks: Vec<(bool, usize)> = policy
        .columns
        .iter()
        .map(|c| match CONFIG_COLUMNS.iter().position(|n| n == c) {
            Some(i) => (true, i),
            None => (false, KPI_COLUMNS.iter().position(|n| n == c).expect("validated column")),
        })
        .collect();
    let d = picks.len();
    let mut data = Vec::with_capacity(records.len() * d);
    let mut targets: BTreeMap<Kqi, Vec<f64>> =
        Kqi::ALL.iter().map(|&k| (k, Vec::with_capacity(records.len()))).collect();
    let mut ids = Vec::with_capacity(records.len());
    for r in records {
        let cfg = r.config().values();
        let kpi = r.kpi_values();
        data.extend(picks.iter().map(|&(is_cfg, i)| if is_cfg { cfg[i] } else { kpi[i] }));
        let kqi = r.kqi_values();
        for k in Kqi::ALL {
            targets.get_mut(&k).expect("all KQIs present").push(kqi[k.index()]);
        }
        ids.push(r.experiment_id());
    }
    let m = DatasetMatrix {
        feature_names: policy.columns,
        x: Matrix::from_vec(records.len(), d, data)?,
        targets,
        split_tag: SplitTag::Unsplit,
        granularity,
        experiment_ids: ids,
    };
    m.validate()?;
    Ok(m)
}

/// A matrix proven to be the training split. Fit operations only accept this.
///
/// ```compile_fail
/// use kqi_core::schema::TestSet;
/// use kqi_core::preprocess::fit_scaler;
/// fn leak(test: &TestSet) {
///     let _ = fit_scaler(test);
/// }
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet(DatasetMatrix);

/// A matrix proven to be the held-out split.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet(DatasetMatrix);

impl TryFrom<DatasetMatrix> for TrainSet {
    type Error = Error;
    fn try_from(m: DatasetMatrix) -> Result<Self> {
        match m.split_tag {
            SplitTag::Train => Ok(TrainSet(m)),
            other => Err(Error::Leakage(format!("expected a train-tagged matrix, got {other:?}"))),
        }
    }
}

impl TryFrom<DatasetMatrix> for TestSet {
    type Error = Error;
    fn try_from(m: DatasetMatrix) -> Result<Self> {
        match m.split_tag {
            SplitTag::Test => Ok(TestSet(m)),
            other => Err(Error::Leakage(format!("expected a test-tagged matrix, got {other:?}"))),
        }
    }
}

impl core::ops::Deref for TrainSet {
    type Target = DatasetMatrix;
    fn deref(&self) -> &DatasetMatrix {
        &self.0
    }
}

impl core::ops::Deref for TestSet {
    type Target = DatasetMatrix;
    fn deref(&self) -> &DatasetMatrix {
        &self.0
    }
}

impl TrainSet {
    pub fn into_inner(self) -> DatasetMatrix {
        self.0
    }

    /// Replaces the features while keeping the tag (used by fitted transforms).
    pub(crate) fn map_features(&self, names: Vec<String>, x: Matrix) -> TrainSet {
        TrainSet(DatasetMatrix { feature_names: names, x, ..self.0.clone() })
    }
}

impl TestSet {
    pub fn into_inner(self) -> DatasetMatrix {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample(id: u64, t: u32) -> Sample {
        Sample {
            experiment_id: id,
            t_s: t,
            config: ScenarioConfig::new(Bandwidth::Mhz10, PowerScenario::MinPt),
            kpis: KpiVector { dl_throughput_mbps: 3.0, sinr_db: 12.0, carrier_freq_mhz: 2655.0, ..Default::default() },
            kqis: KqiVector { resolution_level: 3, frame_rate_fps: 30.0, latency_ms: 40.0, ..Default::default() },
        }
    }

    #[test]
    fn campaign_has_twelve_consistent_configs() {
        let c = ScenarioConfig::campaign();
        assert_eq!(c.len(), 12);
        assert!(c.iter().all(|s| s.validate().is_ok()));
        let red = ScenarioConfig::new(Bandwidth::Mhz5, PowerScenario::RedPtNoise);
        assert_eq!((red.tx_power_db, red.noise_db), (-20.0, -20.0));
    }

    #[test]
    fn inconsistent_power_levels_rejected() {
        let mut c = ScenarioConfig::new(Bandwidth::Mhz5, PowerScenario::MaxPt);
        c.noise_db = -20.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn enum_strings_are_stable() {
        let names: Vec<_> = PowerScenario::ALL.iter().map(|p| p.as_str()).collect();
        assert_eq!(names, ["MaxPT", "MinPT", "RedPT_Noise"]);
        for p in PowerScenario::ALL {
            assert_eq!(p.as_str().parse::<PowerScenario>().unwrap(), p);
        }
        assert!(Bandwidth::try_from(7).is_err());
    }

    #[test]
    fn to_matrix_counts_and_orders_columns() {
        let s = vec![sample(1, 0), sample(1, 1), sample(2, 0)];
        let m = to_matrix(&s, &FeaturePolicy::default(), Granularity::PerSample).unwrap();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.n_features(), 15);
        assert_eq!(m.feature_names[0], "technology");
        assert_eq!(m.targets.len(), 6);
        assert!(m.targets.values().all(|t| t.len() == 3));

        let kp = to_matrix(&s, &FeaturePolicy::kpis_only(), Granularity::PerSample).unwrap();
        assert_eq!(kp.n_features(), KPI_COLUMNS.len());
    }

    #[test]
    fn kqi_as_feature_is_rejected() {
        assert!(FeaturePolicy::with_columns(&["sinr_db", "latency_ms"]).is_err());
        let order = FeaturePolicy::with_columns(&["sinr_db", "bandwidth_mhz"]).unwrap();
        assert_eq!(order.columns(), ["bandwidth_mhz", "sinr_db"]);
    }

    #[test]
    fn to_matrix_rejects_empty_input() {
        let empty: Vec<Sample> = Vec::new();
        assert!(matches!(
            to_matrix(&empty, &FeaturePolicy::default(), Granularity::PerSample),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn to_matrix_is_bitwise_deterministic() {
        let s = vec![sample(1, 0), sample(2, 5)];
        let a = to_matrix(&s, &FeaturePolicy::default(), Granularity::PerSample).unwrap();
        let b = to_matrix(&s, &FeaturePolicy::default(), Granularity::PerSample).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_tags_guard_fit_inputs() {
        let s = vec![sample(1, 0), sample(2, 5)];
        let m = to_matrix(&s, &FeaturePolicy::default(), Granularity::PerSample).unwrap();
        assert!(TrainSet::try_from(m.clone()).is_err());
        assert!(TrainSet::try_from(m.clone().with_tag(SplitTag::Test)).is_err());
        assert!(TrainSet::try_from(m.clone().with_tag(SplitTag::Train)).is_ok());
        assert!(TestSet::try_from(m.with_tag(SplitTag::Train)).is_err());
    }
}
