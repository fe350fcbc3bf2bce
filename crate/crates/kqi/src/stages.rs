//! The five pipeline commands.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use kqi_core::evaluation::{evaluate, mi_matrix, EvaluationReport, MiMatrix};
use kqi_core::features::Strategy;
use kqi_core::pipeline::{fit_strategy, stage_seed, ModelChain, StrategyFit};
use kqi_core::preprocess::{
    aggregate_sessions, apply_scaler, clean_with_rejections, drop_zero_variance, fit_scaler,
    split, CleanReport, ScalerParams, SplitManifest, SplitSpec,
};
use kqi_core::regressors::{grid, Family, Hyperparameters};
use kqi_core::rng::{derive_seed, label};
use kqi_core::schema::{
    to_matrix, DatasetMatrix, FeaturePolicy, Granularity, Kqi, SplitTag, TestSet, TrainSet, SESSION_SECONDS,
};
use kqi_core::selection::{evaluate_cell, finish, make_folds, representatives, reuse_cell, CellRecord, GridResult};
use kqi_core::simulator::{CampaignConfig, SimulatorParams};
use kqi_core::ScenarioConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{ensure_dir, read_json, write_json, Layout, Stamp};
use crate::config::RunConfig;
use crate::csv_io::{fmt_f64, read_matrix_file, read_samples_file, write_matrix_file, write_samples_file};
use crate::error::{Error, Result};
use crate::timing::{ptime_us, StdClock};

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))
}

fn stamp(cfg: &RunConfig) -> Stamp {
    Stamp { config_hash: cfg.hash(), seed: cfg.seed }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn campaign(cfg: &RunConfig) -> CampaignConfig {
    CampaignConfig {
        scenarios: ScenarioConfig::campaign(),
        experiments_per_config: cfg.experiments,
        params: cfg.simulator.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n_samples: usize,
    pub n_experiments: usize,
    pub n_scenarios: usize,
    pub experiments_per_config: usize,
    pub session_seconds: u32,
    pub scenarios: Vec<ScenarioConfig>,
    pub simulator: SimulatorParams,
    pub dataset_sha256: String,
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<DatasetManifest> {
    let layout = Layout::new(&cfg.out);
    ensure_dir(&layout.root)?;
    let camp = campaign(cfg);
    camp.validate()?;
    let experiments: Vec<(usize, usize)> = camp.experiments().collect();
    let sessions = pool(cfg.workers)?.install(|| {
        experiments
            .par_iter()
            .map(|&(c, e)| camp.run_experiment(cfg.seed, c, e))
            .collect::<kqi_core::Result<Vec<_>>>()
    })?;
    let samples: Vec<_> = sessions.into_iter().flatten().collect();
    let path = layout.dataset();
    write_samples_file(&path, &samples)?;
    let manifest = DatasetManifest {
        n_samples: samples.len(),
        n_experiments: experiments.len(),
        n_scenarios: camp.scenarios.len(),
        experiments_per_config: camp.experiments_per_config,
        session_seconds: SESSION_SECONDS,
        scenarios: camp.scenarios.clone(),
        simulator: camp.params.clone(),
        dataset_sha256: sha256_file(&path)?,
    };
    write_json(&layout.manifest(), &stamp(cfg), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedManifest {
    pub granularity: Granularity,
    pub n_train: usize,
    pub n_test: usize,
    pub feature_names: Vec<String>,
    pub dropped_columns: Vec<String>,
    pub train_experiments: usize,
    pub test_experiments: usize,
}

pub fn cmd_prepare(cfg: &RunConfig) -> Result<PreparedManifest> {
    let layout = Layout::new(&cfg.out);
    let table = read_samples_file(&layout.dataset())?;
    let (kept, report) = clean_with_rejections(table.samples, table.rejections, &cfg.clean)?;
    let sessions = aggregate_sessions(&kept)?;
    let spec = SplitSpec { train_fraction: cfg.train_fraction, seed: derive_seed(cfg.seed, &[label("split")]) };
    let (_, _, split_manifest) = split(&sessions, &spec)?;
    let policy = FeaturePolicy::default();
    let full = match cfg.granularity {
        Granularity::PerSession => to_matrix(&sessions, &policy, Granularity::PerSession)?,
        Granularity::PerSample => to_matrix(&kept, &policy, Granularity::PerSample)?,
    };
    let mut train_ids = split_manifest.train_ids();
    let mut test_ids = split_manifest.test_ids();
    train_ids.sort_unstable();
    test_ids.sort_unstable();
    let (full, dropped) = drop_zero_variance(full)?;
    let train = full.filter_experiments(&train_ids, SplitTag::Train);
    let test = full.filter_experiments(&test_ids, SplitTag::Test);
    let train = TrainSet::try_from(train)?;
    let test = TestSet::try_from(test)?;
    let scaler = fit_scaler(&train)?;

    let dir = layout.prepared_dir();
    ensure_dir(&dir)?;
    let st = stamp(cfg);
    write_matrix_file(&layout.prepared("train.csv"), &train)?;
    write_matrix_file(&layout.prepared("test.csv"), &test)?;
    write_matrix_file(&layout.prepared("train_scaled.csv"), &apply_scaler(&scaler, &train)?)?;
    write_matrix_file(&layout.prepared("test_scaled.csv"), &apply_scaler(&scaler, &test)?)?;
    write_json(&layout.prepared("scaler.json"), &st, &scaler)?;
    write_json(&layout.prepared("clean_report.json"), &st, &report)?;
    write_json(&layout.prepared("split.json"), &st, &split_manifest)?;
    write_json(&layout.prepared("dropped_columns.json"), &st, &dropped)?;
    let manifest = PreparedManifest {
        granularity: cfg.granularity,
        n_train: train.n_rows(),
        n_test: test.n_rows(),
        feature_names: train.feature_names.clone(),
        dropped_columns: dropped,
        train_experiments: train_ids.len(),
        test_experiments: test_ids.len(),
    };
    write_json(&layout.prepared("manifest.json"), &st, &manifest)?;
    Ok(manifest)
}

/// Reads the clean report written by [`cmd_prepare`].
pub fn load_clean_report(layout: &Layout) -> Result<CleanReport> {
    Ok(read_json(&layout.prepared("clean_report.json"))?.data)
}

pub fn load_split(layout: &Layout) -> Result<SplitManifest> {
    Ok(read_json(&layout.prepared("split.json"))?.data)
}

fn load_prepared(layout: &Layout, cfg: &RunConfig, file: &str, tag: SplitTag) -> Result<DatasetMatrix> {
    let manifest: PreparedManifest = read_json(&layout.prepared("manifest.json"))?.data;
    if manifest.granularity != cfg.granularity {
        return Err(kqi_core::Error::Config(format!(
            "prepared data is {:?} but the run asks for {:?}",
            manifest.granularity, cfg.granularity
        ))
        .into());
    }
    read_matrix_file(&layout.prepared(file), tag, cfg.granularity)
}

pub fn load_train(layout: &Layout, cfg: &RunConfig) -> Result<(TrainSet, ScalerParams)> {
    let train = TrainSet::try_from(load_prepared(layout, cfg, "train.csv", SplitTag::Train)?)?;
    let scaler: ScalerParams = read_json(&layout.prepared("scaler.json"))?.data;
    Ok((train, scaler))
}

pub fn load_test(layout: &Layout, cfg: &RunConfig) -> Result<TestSet> {
    Ok(TestSet::try_from(load_prepared(layout, cfg, "test.csv", SplitTag::Test)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedEntry {
    pub kqi: Kqi,
    pub strategy: Strategy,
    pub family: Family,
    pub n_cells: usize,
    pub best_cell: usize,
    pub best_hyperparameters: Hyperparameters,
    pub cv_mae: f64,
    pub n_features: usize,
}

struct Job {
    combo: usize,
    family: Family,
    grid: Vec<Hyperparameters>,
    reps: Vec<usize>,
    seed: u64,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<TrainedEntry>> {
    let layout = Layout::new(&cfg.out);
    let (train, scaler) = load_train(&layout, cfg)?;
    if train.feature_names != scaler.feature_names {
        return Err(kqi_core::Error::Schema("prepared train features differ from the scaler's".into()).into());
    }
    let scaled = TrainSet::try_from(apply_scaler(&scaler, &train)?)?;
    let plan = make_folds(scaled.n_rows(), derive_seed(cfg.seed, &[label("cv")]))?;
    let combos: Vec<(Kqi, Strategy)> =
        cfg.kqis.iter().flat_map(|&k| cfg.strategies.iter().map(move |&s| (k, s))).collect();
    let workers = pool(cfg.workers)?;
    let clock = StdClock::new();

    let fits: Vec<StrategyFit> = workers.install(|| {
        combos
            .par_iter()
            .map(|&(k, s)| fit_strategy(s, &scaled, k, cfg.seed, cfg.standardize_target))
            .collect::<kqi_core::Result<_>>()
    })?;

    let mut jobs = Vec::new();
    for (ci, &(kqi, strategy)) in combos.iter().enumerate() {
        for &family in &cfg.families {
            let g = grid(family);
            let reps = representatives(&g);
            let seed = stage_seed(cfg.seed, "grid", kqi, strategy, Some(family));
            jobs.push(Job { combo: ci, family, grid: g, reps, seed });
        }
    }
    let tasks: Vec<(usize, usize)> = jobs
        .iter()
        .enumerate()
        .flat_map(|(j, job)| (0..job.grid.len()).filter(|&i| job.reps[i] == i).map(move |i| (j, i)))
        .collect();
    eprintln!("train: {} grids, {} distinct cells, {} workers", jobs.len(), tasks.len(), cfg.workers);

    let evaluated: Vec<CellRecord> = workers.install(|| {
        tasks
            .par_iter()
            .map(|&(j, i)| {
                let job = &jobs[j];
                let fit = &fits[job.combo];
                evaluate_cell(i, &job.grid[i], &fit.train.x, &fit.y, &plan, job.seed, &clock)
            })
            .collect()
    });

    let mut evaluated = evaluated.into_iter();
    let mut tables: Vec<Vec<CellRecord>> = Vec::with_capacity(jobs.len());
    for job in &jobs {
        let mut cells: Vec<CellRecord> = Vec::with_capacity(job.grid.len());
        for (i, hp) in job.grid.iter().enumerate() {
            let rec = if job.reps[i] == i {
                evaluated.next().expect("one record per distinct cell")
            } else {
                reuse_cell(i, hp, &cells[job.reps[i]])
            };
            cells.push(rec);
        }
        tables.push(cells);
    }

    let results: Vec<GridResult> = workers.install(|| {
        jobs.par_iter()
            .zip(tables)
            .map(|(job, cells)| {
                let fit = &fits[job.combo];
                finish(job.family, cells, &fit.train.x, &fit.y, job.seed)
            })
            .collect::<kqi_core::Result<_>>()
    })?;

    ensure_dir(&layout.models_dir())?;
    ensure_dir(&layout.cv_dir())?;
    let st = stamp(cfg);
    let mut entries = Vec::with_capacity(jobs.len());
    for (job, result) in jobs.iter().zip(results) {
        let (kqi, strategy) = combos[job.combo];
        let fit = &fits[job.combo];
        write_cv_table(&layout.cv_table(kqi, strategy, job.family), &st, kqi, strategy, &result)?;
        let best = &result.cells[result.best_cell];
        entries.push(TrainedEntry {
            kqi,
            strategy,
            family: job.family,
            n_cells: result.cells.len(),
            best_cell: result.best_cell,
            best_hyperparameters: best.hyperparameters.clone(),
            cv_mae: best.mean_mae,
            n_features: result.model.n_features,
        });
        let chain = ModelChain {
            kqi,
            strategy,
            scaler: scaler.clone(),
            transform: fit.transform.clone(),
            target_scaler: fit.target_scaler,
            model: result.model,
        };
        write_json(&layout.model(kqi, strategy, job.family), &st, &chain)?;
    }
    write_json(&layout.models_dir().join("index.json"), &st, &entries)?;
    Ok(entries)
}

fn write_cv_table(path: &Path, st: &Stamp, kqi: Kqi, strategy: Strategy, r: &GridResult) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(f));
    let n_folds = r.cells.first().map_or(0, |c| c.fold_mae.len());
    let mut header: Vec<String> =
        ["config_hash", "seed", "kqi", "strategy", "family", "cell", "hyperparameters"].map(String::from).to_vec();
    header.extend((1..=n_folds).map(|f| format!("fold{f}_mae")));
    header.extend(
        ["mean_mae", "mean_fit_time_s", "converged", "error", "reused_from", "best"].map(String::from),
    );
    let wrap = |e| Error::csv(path, e);
    w.write_record(&header).map_err(wrap)?;
    for c in &r.cells {
        let mut row = vec![
            st.config_hash.clone(),
            st.seed.to_string(),
            kqi.name().to_string(),
            strategy.as_str().to_string(),
            r.family.as_str().to_string(),
            c.index.to_string(),
            c.hyperparameters.to_string(),
        ];
        row.extend(c.fold_mae.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(c.mean_mae));
        row.push(fmt_f64(c.mean_fit_time_s));
        row.push(c.converged.to_string());
        row.push(c.error.clone().unwrap_or_default());
        row.push(c.reused_from.map(|i| i.to_string()).unwrap_or_default());
        row.push((c.index == r.best_cell).to_string());
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub reports: Vec<EvaluationReport>,
    pub ptime_us: Vec<f64>,
    pub mi: MiMatrix,
}

pub fn load_model(layout: &Layout, kqi: Kqi, strategy: Strategy, family: Family) -> Result<ModelChain> {
    let path = layout.model(kqi, strategy, family);
    let chain: ModelChain = read_json(&path)?.data;
    if chain.kqi != kqi || chain.strategy != strategy || chain.model.spec.family() != family {
        return Err(Error::format(&path, "model file does not match its name"));
    }
    Ok(chain)
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Evaluation> {
    let layout = Layout::new(&cfg.out);
    let test = load_test(&layout, cfg)?;
    let mut reports = Vec::new();
    let mut ptimes = Vec::new();
    for &kqi in &cfg.kqis {
        for &strategy in &cfg.strategies {
            for &family in &cfg.families {
                let chain = load_model(&layout, kqi, strategy, family)?;
                reports.push(evaluate(&chain, &test)?);
                ptimes.push(ptime_us(&chain, &test.x, cfg.ptime_repeats)?);
            }
        }
    }
    let train = load_prepared(&layout, cfg, "train.csv", SplitTag::Train)?;
    let all: Vec<(Kqi, Vec<f64>)> = Kqi::ALL
        .iter()
        .map(|&k| Ok((k, [train.target(k)?, test.target(k)?].concat())))
        .collect::<kqi_core::Result<_>>()?;
    let cols: Vec<(Kqi, &[f64])> = all.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let n = cols.first().map_or(0, |c| c.1.len());
    let mi = mi_matrix(&cols, cfg.mi_bins.min(n / 10).max(2))?;

    ensure_dir(&layout.reports_dir())?;
    let st = stamp(cfg);
    write_json(&layout.report("reports.json"), &st, &reports)?;
    write_json(&layout.report("mi.json"), &st, &mi)?;
    write_text(&layout.report("summary.csv"), &summary_csv(&st, cfg, &reports))?;
    write_text(&layout.report("timing.csv"), &timing_csv(&st, &reports, &ptimes))?;
    Ok(Evaluation { reports, ptime_us: ptimes, mi })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn pct_key(r: &EvaluationReport) -> f64 {
    r.mae_pct.unwrap_or(f64::INFINITY)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per KQI x strategy x family. Families are ranked by MAE% within
/// each (KQI, strategy) block and the lowest MAE% row of each KQI is flagged.
pub fn summary_csv(st: &Stamp, cfg: &RunConfig, reports: &[EvaluationReport]) -> String {
    let mut out = String::from(
        "config_hash,seed,kqi,strategy,rank,family,mae,mae_pct,band,n_features,best_hyperparameters,converged,note,best_for_kqi\n",
    );
    for &kqi in &cfg.kqis {
        let of_kqi: Vec<&EvaluationReport> = reports.iter().filter(|r| r.kqi == kqi).collect();
        let best = of_kqi.iter().copied().reduce(|a, b| if pct_key(b) < pct_key(a) { b } else { a });
        for &strategy in &cfg.strategies {
            let mut block: Vec<&EvaluationReport> = of_kqi.iter().copied().filter(|r| r.strategy == strategy).collect();
            block.sort_by(|a, b| pct_key(a).total_cmp(&pct_key(b)));
            for (rank, r) in block.iter().enumerate() {
                let is_best = best.is_some_and(|b| std::ptr::eq(b, *r));
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    st.config_hash,
                    st.seed,
                    kqi.name(),
                    strategy.as_str(),
                    rank + 1,
                    r.family.as_str(),
                    fmt_f64(r.mae),
                    r.mae_pct.map(fmt_f64).unwrap_or_default(),
                    r.band.map(|b| b.as_str()).unwrap_or(""),
                    r.n_features,
                    csv_field(&r.best_hyperparameters.to_string()),
                    r.converged,
                    csv_field(r.note.as_deref().unwrap_or("")),
                    is_best,
                );
            }
        }
    }
    out
}

fn timing_csv(st: &Stamp, reports: &[EvaluationReport], ptimes: &[f64]) -> String {
    let mut out = String::from("config_hash,seed,kqi,strategy,family,n_test,ptime_us\n");
    for (r, t) in reports.iter().zip(ptimes) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            st.config_hash,
            st.seed,
            r.kqi.name(),
            r.strategy.as_str(),
            r.family.as_str(),
            r.n_test,
            fmt_f64(*t)
        );
    }
    out
}

pub fn cmd_all(cfg: &RunConfig) -> Result<Evaluation> {
    let m = cmd_generate(cfg)?;
    eprintln!("generate: {} samples from {} experiments", m.n_samples, m.n_experiments);
    let p = cmd_prepare(cfg)?;
    eprintln!("prepare: {} train / {} test rows, {} features", p.n_train, p.n_test, p.feature_names.len());
    let t = cmd_train(cfg)?;
    eprintln!("train: {} models", t.len());
    let e = cmd_evaluate(cfg)?;
    eprintln!("evaluate: {} reports", e.reports.len());
    Ok(e)
}
