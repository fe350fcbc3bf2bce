//! Cleaning, zero-variance removal, session aggregation, the stratified
//! train/test split and feature standardization.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{label, rng_from};
use crate::schema::{Bandwidth, DatasetMatrix, PowerScenario, Record, Sample, SessionRecord, SplitTag, TrainSet};

/// A CSV row refused before it became a [`Sample`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub line: u64,
    pub experiment_id: Option<u64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedSample {
    pub experiment_id: u64,
    pub t_s: Option<u32>,
    pub line: Option<u64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedExperiment {
    pub experiment_id: u64,
    pub bad_samples: usize,
    pub total_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleanReport {
    pub input_samples: usize,
    pub rejected_rows: Vec<Rejection>,
    pub dropped_samples: Vec<DroppedSample>,
    pub dropped_experiments: Vec<DroppedExperiment>,
    pub kept_samples: usize,
}

impl CleanReport {
    /// Every sample removed, whether individually or with its experiment.
    pub fn total_dropped(&self) -> usize {
        self.input_samples - self.kept_samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    /// Spectral-efficiency scaler used for the theoretical channel cap.
    pub eta: f64,
    /// Samples whose client throughput exceeds this multiple of the cap are measurement errors.
    pub throughput_cap_factor: f64,
    /// Experiments losing more than this fraction of their samples are dropped whole.
    pub max_bad_fraction: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig { eta: 0.35, throughput_cap_factor: 1.2, max_bad_fraction: 0.10 }
    }
}

fn check_sample(s: &Sample, cfg: &CleanConfig) -> Option<String> {
    let k = &s.kpis;
    let q = &s.kqis;
    let fields: [(&str, f64); 14] = [
        ("tx_power_db", s.config.tx_power_db),
        ("noise_db", s.config.noise_db),
        ("dl_throughput_mbps", k.dl_throughput_mbps),
        ("ul_throughput_mbps", k.ul_throughput_mbps),
        ("sinr_db", k.sinr_db),
        ("rsrp_dbm", k.rsrp_dbm),
        ("carrier_freq_mhz", k.carrier_freq_mhz),
        ("channel_util", k.channel_util),
        ("cpe_wifi_rssi_dbm", k.cpe_wifi_rssi_dbm),
        ("cpe_link_rate_mbps", k.cpe_link_rate_mbps),
        ("frame_rate_fps", q.frame_rate_fps),
        ("initial_startup_ms", q.initial_startup_ms),
        ("avg_stall_ms", q.avg_stall_ms),
        ("client_throughput_mbps", q.client_throughput_mbps),
    ];
    if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
        return Some(format!("{name} is not finite"));
    }
    if !q.latency_ms.is_finite() {
        return Some("latency_ms is not finite".into());
    }
    let non_negative = [
        ("dl_throughput_mbps", k.dl_throughput_mbps),
        ("ul_throughput_mbps", k.ul_throughput_mbps),
        ("cpe_link_rate_mbps", k.cpe_link_rate_mbps),
        ("frame_rate_fps", q.frame_rate_fps),
        ("initial_startup_ms", q.initial_startup_ms),
        ("avg_stall_ms", q.avg_stall_ms),
        ("client_throughput_mbps", q.client_throughput_mbps),
        ("latency_ms", q.latency_ms),
    ];
    if let Some((name, v)) = non_negative.iter().find(|(_, v)| *v < 0.0) {
        return Some(format!("{name} = {v} is negative"));
    }
    if !(0.0..=1.0).contains(&k.channel_util) {
        return Some(format!("channel_util = {} outside [0,1]", k.channel_util));
    }
    if q.frame_rate_fps > 30.0 {
        return Some(format!("frame_rate_fps = {} above 30", q.frame_rate_fps));
    }
    if q.resolution_level > 5 {
        return Some(format!("resolution_level = {} outside 0..=5", q.resolution_level));
    }
    let cap = cfg.eta * s.config.bandwidth.mhz() as f64 * libm::log2(1.0 + libm::pow(10.0, k.sinr_db / 10.0));
    if q.client_throughput_mbps > cfg.throughput_cap_factor * cap {
        return Some(format!(
            "client_throughput_mbps = {} exceeds {}x theoretical cap {cap}",
            q.client_throughput_mbps, cfg.throughput_cap_factor
        ));
    }
    None
}

/// Removes measurement errors and experiments that lost too many samples.
pub fn clean(samples: Vec<Sample>, cfg: &CleanConfig) -> Result<(Vec<Sample>, CleanReport)> {
    clean_with_rejections(samples, Vec::new(), cfg)
}

/// As [`clean`], also folding in rows the CSV reader already refused; those
/// count against their experiment's bad-sample budget.
pub fn clean_with_rejections(
    samples: Vec<Sample>,
    rejected_rows: Vec<Rejection>,
    cfg: &CleanConfig,
) -> Result<(Vec<Sample>, CleanReport)> {
    let input_samples = samples.len();
    let mut bad: BTreeMap<u64, usize> = BTreeMap::new();
    let mut total: BTreeMap<u64, usize> = BTreeMap::new();
    for r in &rejected_rows {
        if let Some(id) = r.experiment_id {
            *bad.entry(id).or_default() += 1;
            *total.entry(id).or_default() += 1;
        }
    }
    let mut dropped_samples = Vec::new();
    let mut keep = Vec::with_capacity(samples.len());
    for s in samples {
        *total.entry(s.experiment_id).or_default() += 1;
        match check_sample(&s, cfg) {
            Some(reason) => {
                *bad.entry(s.experiment_id).or_default() += 1;
                dropped_samples.push(DroppedSample { experiment_id: s.experiment_id, t_s: Some(s.t_s), line: None, reason });
            }
            None => keep.push(s),
        }
    }
    let dropped_experiments: Vec<DroppedExperiment> = bad
        .iter()
        .filter_map(|(&id, &n_bad)| {
            let n = total[&id];
            (n_bad as f64 > cfg.max_bad_fraction * n as f64).then_some(DroppedExperiment {
                experiment_id: id,
                bad_samples: n_bad,
                total_samples: n,
            })
        })
        .collect();
    let gone: BTreeSet<u64> = dropped_experiments.iter().map(|d| d.experiment_id).collect();
    keep.retain(|s| !gone.contains(&s.experiment_id));
    if keep.is_empty() {
        return Err(Error::empty("cleaning dropped every sample"));
    }
    let report = CleanReport { input_samples, rejected_rows, dropped_samples, kept_samples: keep.len(), dropped_experiments };
    Ok((keep, report))
}

/// Drops feature columns that are exactly constant over the input.
pub fn drop_zero_variance(m: DatasetMatrix) -> Result<(DatasetMatrix, Vec<String>)> {
    if m.split_tag == SplitTag::Test {
        return Err(Error::Leakage("zero-variance screening must not look at the test split".into()));
    }
    if m.n_rows() == 0 {
        return Err(Error::empty("no rows to screen"));
    }
    let first = m.x.row(0).to_vec();
    let constant: Vec<bool> = (0..m.n_features())
        .map(|j| m.x.row_iter().all(|r| r[j] == first[j]))
        .collect();
    let keep: Vec<usize> = (0..m.n_features()).filter(|&j| !constant[j]).collect();
    if keep.is_empty() {
        return Err(Error::schema("every feature column has zero variance"));
    }
    let dropped = (0..m.n_features()).filter(|&j| constant[j]).map(|j| m.feature_names[j].clone()).collect();
    let out = DatasetMatrix {
        feature_names: keep.iter().map(|&j| m.feature_names[j].clone()).collect(),
        x: m.x.select_columns(&keep),
        ..m
    };
    Ok((out, dropped))
}

/// Applies a previously decided column drop to another matrix (e.g. the test split).
pub fn drop_columns(m: DatasetMatrix, names: &[String]) -> DatasetMatrix {
    let keep: Vec<usize> = (0..m.n_features()).filter(|&j| !names.contains(&m.feature_names[j])).collect();
    DatasetMatrix {
        feature_names: keep.iter().map(|&j| m.feature_names[j].clone()).collect(),
        x: m.x.select_columns(&keep),
        ..m
    }
}

fn sample_order(a: &Sample, b: &Sample) -> Ordering {
    a.t_s.cmp(&b.t_s).then_with(|| {
        let (ka, kb) = (a.kpis.values(), b.kpis.values());
        let (qa, qb) = (a.kqis.values(), b.kqis.values());
        ka.iter()
            .chain(qa.iter())
            .zip(kb.iter().chain(qb.iter()))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Lower median of a resolution sequence.
pub fn lower_median(levels: &mut [u8]) -> u8 {
    levels.sort_unstable();
    levels[(levels.len() - 1) / 2]
}

/// One record per experiment: KPI means, median resolution, mean of other KQIs.
/// Records come back ordered by experiment id.
pub fn aggregate_sessions(samples: &[Sample]) -> Result<Vec<SessionRecord>> {
    let mut groups: BTreeMap<u64, Vec<&Sample>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.experiment_id).or_default().push(s);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (id, mut g) in groups {
        // canonical order so float sums do not depend on input order
        g.sort_by(|a, b| sample_order(a, b));
        let config = g[0].config;
        if g.iter().any(|s| s.config != config) {
            return Err(Error::schema(format!("experiment {id} mixes scenario configurations")));
        }
        let n = g.len() as f64;
        let mut kpis = [0.0; 10];
        let mut kqis = [0.0; 6];
        for s in &g {
            for (acc, v) in kpis.iter_mut().zip(s.kpis.values()) {
                *acc += v;
            }
            for (acc, v) in kqis.iter_mut().zip(s.kqis.values()) {
                *acc += v;
            }
        }
        kpis.iter_mut().for_each(|v| *v /= n);
        kqis.iter_mut().for_each(|v| *v /= n);
        let mut levels: Vec<u8> = g.iter().map(|s| s.kqis.resolution_level).collect();
        out.push(SessionRecord {
            experiment_id: id,
            config,
            n_samples: g.len(),
            kpis,
            resolution_level: lower_median(&mut levels),
            frame_rate_fps: kqis[1],
            initial_startup_ms: kqis[2],
            avg_stall_ms: kqis[3],
            client_throughput_mbps: kqis[4],
            latency_ms: kqis[5],
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec { train_fraction: 0.70, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config(format!(
                "train_fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumSplit {
    pub stratum: String,
    pub train: Vec<u64>,
    pub test: Vec<u64>,
}

/// Membership of both sides, per stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train_fraction_permille: u32,
    pub seed: u64,
    pub strata: Vec<StratumSplit>,
}

impl SplitManifest {
    /// Sorted experiment ids of the training side.
    pub fn train_ids(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.strata.iter().flat_map(|s| s.train.iter().copied()).collect();
        v.sort_unstable();
        v
    }

    pub fn test_ids(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.strata.iter().flat_map(|s| s.test.iter().copied()).collect();
        v.sort_unstable();
        v
    }
}

/// Stratified seeded split: shuffle within each scenario, cut at the train fraction.
pub fn split<R: Record + Clone>(records: &[R], spec: &SplitSpec) -> Result<(Vec<R>, Vec<R>, SplitManifest)> {
    spec.validate()?;
    let mut strata: BTreeMap<(Bandwidth, PowerScenario), Vec<&R>> = BTreeMap::new();
    for r in records {
        strata.entry(r.config().stratum()).or_default().push(r);
    }
    if strata.is_empty() {
        return Err(Error::empty("no records to split"));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut manifest = Vec::new();
    for ((bw, power), mut members) in strata {
        let name = format!("{}MHz/{}", bw.mhz(), power);
        if members.len() < 2 {
            return Err(Error::config(format!("stratum {name} has {} record(s); at least 2 required", members.len())));
        }
        members.sort_by_key(|r| r.experiment_id());
        let mut rng = rng_from(spec.seed, &[label(&name)]);
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = (libm::round(spec.train_fraction * n as f64) as usize).clamp(1, n - 1);
        let (a, b) = members.split_at(n_train);
        let mut tr: Vec<u64> = a.iter().map(|r| r.experiment_id()).collect();
        let mut te: Vec<u64> = b.iter().map(|r| r.experiment_id()).collect();
        tr.sort_unstable();
        te.sort_unstable();
        train.extend(a.iter().map(|r| (*r).clone()));
        test.extend(b.iter().map(|r| (*r).clone()));
        manifest.push(StratumSplit { stratum: name, train: tr, test: te });
    }
    train.sort_by_key(|r| r.experiment_id());
    test.sort_by_key(|r| r.experiment_id());
    let manifest = SplitManifest {
        train_fraction_permille: libm::round(spec.train_fraction * 1000.0) as u32,
        seed: spec.seed,
        strata: manifest,
    };
    Ok((train, test, manifest))
}

/// Per-feature standardization parameters, fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_scaler(train: &TrainSet) -> Result<ScalerParams> {
    if train.n_rows() == 0 {
        return Err(Error::empty("cannot fit a scaler on zero rows"));
    }
    let mean = train.x.column_means();
    let std: Vec<f64> = train.x.column_variances().into_iter().map(libm::sqrt).collect();
    if let Some(j) = std.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::Numerical(format!("feature {:?} has zero standard deviation", train.feature_names[j])));
    }
    Ok(ScalerParams { feature_names: train.feature_names.clone(), mean, std })
}

impl ScalerParams {
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Dimension { expected: self.mean.len(), actual: x.cols() });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.mean.len() {
            return Err(Error::Dimension { expected: self.mean.len(), actual: z.cols() });
        }
        let mut out = z.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }
}

/// Standardizes any split with training parameters; the split tag is kept.
pub fn apply_scaler(params: &ScalerParams, m: &DatasetMatrix) -> Result<DatasetMatrix> {
    if m.feature_names != params.feature_names {
        return Err(Error::schema("feature columns differ from those the scaler was fitted on"));
    }
    Ok(DatasetMatrix { x: params.transform(&m.x)?, ..m.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{to_matrix, FeaturePolicy, Granularity, KpiVector, KqiVector, ScenarioConfig, SplitTag};

    fn sample(id: u64, t: u32, cfg: ScenarioConfig) -> Sample {
        Sample {
            experiment_id: id,
            t_s: t,
            config: cfg,
            kpis: KpiVector {
                dl_throughput_mbps: 2.0 + t as f64 * 0.01,
                sinr_db: 15.0,
                carrier_freq_mhz: 2655.0,
                channel_util: 0.4,
                cpe_link_rate_mbps: 866.7,
                ..Default::default()
            },
            kqis: KqiVector {
                resolution_level: 3,
                frame_rate_fps: 30.0,
                initial_startup_ms: 700.0,
                avg_stall_ms: 0.0,
                client_throughput_mbps: 2.0,
                latency_ms: 50.0,
            },
        }
    }

    fn experiment(id: u64, cfg: ScenarioConfig) -> Vec<Sample> {
        (0..120).map(|t| sample(id, t, cfg)).collect()
    }

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::new(Bandwidth::Mhz10, PowerScenario::MaxPt)
    }

    #[test]
    fn clean_keeps_valid_data() {
        let (kept, rep) = clean(experiment(1, cfg()), &CleanConfig::default()).unwrap();
        assert_eq!(kept.len(), 120);
        assert_eq!(rep.total_dropped(), 0);
    }

    #[test]
    fn negative_latency_dropped_with_reason() {
        let mut s = experiment(1, cfg());
        s[7].kqis.latency_ms = -5.0;
        let (kept, rep) = clean(s, &CleanConfig::default()).unwrap();
        assert_eq!(kept.len(), 119);
        assert_eq!(rep.dropped_samples.len(), 1);
        assert_eq!(rep.dropped_samples[0].t_s, Some(7));
        assert!(rep.dropped_samples[0].reason.contains("latency_ms"));
        assert!(rep.dropped_experiments.is_empty());
    }

    #[test]
    fn heavily_corrupted_experiment_dropped_whole() {
        let mut s = experiment(1, cfg());
        s.extend(experiment(2, cfg()));
        for x in s.iter_mut().take(15) {
            x.kpis.sinr_db = f64::NAN;
        }
        let (kept, rep) = clean(s, &CleanConfig::default()).unwrap();
        assert_eq!(kept.len(), 120);
        assert!(kept.iter().all(|x| x.experiment_id == 2));
        assert_eq!(rep.dropped_experiments.len(), 1);
        assert_eq!(rep.dropped_experiments[0].bad_samples, 15);
        assert_eq!(rep.total_dropped(), 120);
    }

    #[test]
    fn twelve_bad_samples_is_the_limit() {
        let mut s = experiment(1, cfg());
        for x in s.iter_mut().take(12) {
            x.kqis.avg_stall_ms = -1.0;
        }
        let (kept, rep) = clean(s, &CleanConfig::default()).unwrap();
        assert_eq!(kept.len(), 108);
        assert!(rep.dropped_experiments.is_empty());
    }

    #[test]
    fn throughput_above_channel_cap_is_an_error() {
        let mut s = experiment(1, cfg());
        s[3].kqis.client_throughput_mbps = 1e4;
        let (_, rep) = clean(s, &CleanConfig::default()).unwrap();
        assert!(rep.dropped_samples[0].reason.contains("theoretical cap"));
    }

    #[test]
    fn clean_everything_dropped_errors() {
        let mut s = experiment(1, cfg());
        s.iter_mut().for_each(|x| x.kpis.channel_util = 2.0);
        assert!(clean(s, &CleanConfig::default()).is_err());
    }

    #[test]
    fn clean_is_idempotent() {
        let mut s = experiment(1, cfg());
        s[0].kqis.frame_rate_fps = 31.0;
        let (once, _) = clean(s, &CleanConfig::default()).unwrap();
        let (twice, rep) = clean(once.clone(), &CleanConfig::default()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(rep.total_dropped(), 0);
    }

    #[test]
    fn reader_rejections_count_toward_experiment_budget() {
        let s: Vec<Sample> = experiment(4, cfg()).into_iter().skip(13).collect();
        let rej: Vec<Rejection> = (0..13)
            .map(|i| Rejection { line: i + 2, experiment_id: Some(4), reason: "bandwidth not in {5,10,15,20}".into() })
            .collect();
        let mut other = experiment(5, cfg());
        other.extend(s);
        let (kept, rep) = clean_with_rejections(other, rej, &CleanConfig::default()).unwrap();
        assert!(kept.iter().all(|x| x.experiment_id == 5));
        assert_eq!(rep.rejected_rows.len(), 13);
    }

    #[test]
    fn median_tie_takes_lower_level() {
        let mut s: Vec<Sample> = (0..4).map(|t| sample(9, t, cfg())).collect();
        for (x, l) in s.iter_mut().zip([3, 3, 4, 4]) {
            x.kqis.resolution_level = l;
        }
        let r = aggregate_sessions(&s).unwrap();
        assert_eq!(r[0].resolution_level, 3);
        assert_eq!(lower_median(&mut [5, 1, 2]), 2);
    }

    #[test]
    fn constant_experiment_aggregates_to_constant() {
        let mut s = experiment(3, cfg());
        s.iter_mut().for_each(|x| x.kpis.dl_throughput_mbps = 4.25);
        let r = aggregate_sessions(&s).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kpis[0], 4.25);
        assert_eq!(r[0].latency_ms, 50.0);
        assert_eq!(r[0].resolution_level, 3);
        assert_eq!(r[0].n_samples, 120);
    }

    #[test]
    fn aggregation_ignores_sample_order() {
        let mut s = experiment(3, cfg());
        for (i, x) in s.iter_mut().enumerate() {
            x.kpis.sinr_db = 1.0 / (i as f64 + 0.37);
        }
        let a = aggregate_sessions(&s).unwrap();
        s.reverse();
        s.swap(5, 77);
        assert_eq!(a, aggregate_sessions(&s).unwrap());
    }

    fn sessions(per_stratum: u64) -> Vec<SessionRecord> {
        let mut all = Vec::new();
        for (ci, c) in ScenarioConfig::campaign().into_iter().enumerate() {
            for e in 0..per_stratum {
                all.extend(experiment(ci as u64 * per_stratum + e, c));
            }
        }
        aggregate_sessions(&all).unwrap()
    }

    #[test]
    fn split_seventy_thirty_per_stratum() {
        let recs = sessions(60);
        assert_eq!(recs.len(), 720);
        let (tr, te, man) = split(&recs, &SplitSpec::new(1)).unwrap();
        assert_eq!((tr.len(), te.len()), (504, 216));
        assert_eq!(man.strata.len(), 12);
        assert!(man.strata.iter().all(|s| s.train.len() == 42 && s.test.len() == 18));
        let (tr2, _, _) = split(&recs, &SplitSpec::new(1)).unwrap();
        assert_eq!(tr, tr2);
        let (tr3, te3, _) = split(&recs, &SplitSpec::new(2)).unwrap();
        assert_eq!((tr3.len(), te3.len()), (504, 216));
        assert_ne!(tr, tr3);
    }

    #[test]
    fn split_rejects_degenerate_fraction_and_tiny_strata() {
        let recs = sessions(2);
        let spec = SplitSpec { train_fraction: 1.0, seed: 0 };
        assert!(split(&recs, &spec).is_err());
        let one = sessions(1);
        let err = split(&one, &SplitSpec::new(0)).unwrap_err();
        assert!(alloc::format!("{err}").contains("MHz/"));
    }

    fn matrix(rows: &[[f64; 3]], tag: SplitTag) -> DatasetMatrix {
        let samples: Vec<Sample> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = sample(i as u64, 0, cfg());
                s.kpis.dl_throughput_mbps = r[0];
                s.kpis.ul_throughput_mbps = r[1];
                s.kpis.sinr_db = r[2];
                s
            })
            .collect();
        let p = FeaturePolicy::with_columns(&["dl_throughput_mbps", "ul_throughput_mbps", "sinr_db"]).unwrap();
        to_matrix(&samples, &p, Granularity::PerSession).unwrap().with_tag(tag)
    }

    #[test]
    fn zero_variance_columns_dropped() {
        let s: Vec<Sample> = (0..5)
            .map(|i| {
                let mut s = sample(i, 0, cfg());
                s.kpis.dl_throughput_mbps = i as f64;
                s
            })
            .collect();
        let m = to_matrix(&s, &FeaturePolicy::default(), Granularity::PerSession).unwrap();
        let (m2, dropped) = drop_zero_variance(m.clone()).unwrap();
        assert!(dropped.iter().any(|d| d == "technology"));
        assert!(dropped.iter().any(|d| d == "carrier_freq_mhz"));
        assert_eq!(m2.n_features(), m.n_features() - dropped.len());

        let m = matrix(&[[1.0, 7.0, 2.0], [2.0, 7.0, 2.0], [3.0, 7.0, 2.5]], SplitTag::Unsplit);
        let (m2, dropped) = drop_zero_variance(m).unwrap();
        assert_eq!(dropped, ["ul_throughput_mbps"]);
        assert_eq!(m2.feature_names, ["dl_throughput_mbps", "sinr_db"]);
    }

    #[test]
    fn zero_variance_refuses_test_split_and_all_constant() {
        let m = matrix(&[[1.0, 7.0, 2.0], [2.0, 7.0, 2.0]], SplitTag::Test);
        assert!(matches!(drop_zero_variance(m), Err(Error::Leakage(_))));
        let m = matrix(&[[1.0, 7.0, 2.0], [1.0, 7.0, 2.0]], SplitTag::Train);
        assert!(drop_zero_variance(m).is_err());
    }

    #[test]
    fn scaler_standardizes_train_and_shifts_test() {
        let rows = [[1.0, 10.0, -3.0], [2.0, 14.0, 0.5], [4.0, 11.0, 2.0], [7.0, 19.0, 9.0]];
        let train = TrainSet::try_from(matrix(&rows, SplitTag::Train)).unwrap();
        let p = fit_scaler(&train).unwrap();
        let z = apply_scaler(&p, &train).unwrap();
        for (m, v) in z.x.column_means().iter().zip(z.x.column_variances()) {
            assert!(m.abs() < 1e-9);
            assert!((libm::sqrt(v) - 1.0).abs() < 1e-9);
        }
        // shift by c: transformed mean = c / sigma
        let shift = [3.0, -2.0, 10.0];
        let shifted: Vec<[f64; 3]> = rows.iter().map(|r| [r[0] + shift[0], r[1] + shift[1], r[2] + shift[2]]).collect();
        let test = apply_scaler(&p, &matrix(&shifted, SplitTag::Test)).unwrap();
        for (j, m) in test.x.column_means().iter().enumerate() {
            assert!((m - shift[j] / p.std[j]).abs() < 1e-12);
        }
        assert_eq!(test.split_tag, SplitTag::Test);
        let back = p.inverse(&z.x).unwrap();
        for (a, b) in back.as_slice().iter().zip(train.x.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scaler_rejects_constant_column() {
        let train = TrainSet::try_from(matrix(&[[1.0, 7.0, 2.0], [2.0, 7.0, 3.0]], SplitTag::Train)).unwrap();
        assert!(fit_scaler(&train).is_err());
    }
}
