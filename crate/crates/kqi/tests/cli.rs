use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use kqi::artifacts::{read_json, Layout};
use kqi::stages::{DatasetManifest, PreparedManifest, TrainedEntry};
use kqi_core::evaluation::{EvaluationReport, MiMatrix};
use kqi_core::preprocess::CleanReport;
use tempfile::TempDir;

fn kqi(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kqi")).args(args).arg("--out").arg(out).output().unwrap()
}

fn ok(out: &Path, args: &[&str]) {
    let o = kqi(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn code(out: &Path, args: &[&str]) -> i32 {
    kqi(out, args).status.code().unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["frobnicate"]), 1);
    assert_eq!(code(d, &["generate", "--seed", "x"]), 1);
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["generate", "--families", "gbm"]), 2);
    assert_eq!(code(d, &["generate", "--experiments", "0"]), 2);
    assert_eq!(code(d, &["prepare"]), 3);
    let cfg = d.join("bad.toml");
    std::fs::write(&cfg, "seeed = 3\n").unwrap();
    assert_ne!(code(d, &["generate", "--config", cfg.to_str().unwrap()]), 0);
}

#[test]
fn generate_is_deterministic_and_sized() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(a.path(), &["generate", "--experiments", "2", "--seed", "5"]);
    ok(b.path(), &["generate", "--experiments", "2", "--seed", "5"]);
    let (la, lb) = (Layout::new(a.path()), Layout::new(b.path()));
    let rows = lines(&la.dataset());
    assert_eq!(rows.len(), 1 + 2880);
    assert_eq!(std::fs::read(la.dataset()).unwrap(), std::fs::read(lb.dataset()).unwrap());
    let m = read_json::<DatasetManifest>(&la.manifest()).unwrap();
    assert_eq!((m.data.n_samples, m.data.n_experiments, m.seed), (2880, 24, 5));

    let c = TempDir::new().unwrap();
    ok(c.path(), &["generate", "--experiments", "2", "--seed", "6"]);
    assert_ne!(std::fs::read(la.dataset()).unwrap(), std::fs::read(Layout::new(c.path()).dataset()).unwrap());
}

#[test]
fn corrupted_row_is_reported() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--experiments", "5"]);
    let layout = Layout::new(d);
    let mut rows = lines(&layout.dataset());
    let header: Vec<&str> = rows[0].split(',').collect();
    let bw = header.iter().position(|h| *h == "bandwidth_mhz").unwrap();
    let mut fields: Vec<String> = rows[10].split(',').map(str::to_string).collect();
    fields[bw] = "7".into();
    rows[10] = fields.join(",");
    std::fs::write(layout.dataset(), rows.join("\n") + "\n").unwrap();
    ok(d, &["prepare"]);
    let report = read_json::<CleanReport>(&layout.prepared("clean_report.json")).unwrap().data;
    assert_eq!(report.rejected_rows.len(), 1);
    assert_eq!(report.rejected_rows[0].line, 11);
    assert!(report.rejected_rows[0].reason.contains("bandwidth"));
}

#[test]
fn per_sample_split_keeps_experiments_whole() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--experiments", "5"]);
    ok(d, &["prepare", "--granularity", "per_sample"]);
    let layout = Layout::new(d);
    let ids = |name: &str| -> Vec<String> {
        lines(&layout.prepared(name)).into_iter().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect()
    };
    let (train, test) = (ids("train.csv"), ids("test.csv"));
    let tr: BTreeSet<&String> = train.iter().collect();
    let te: BTreeSet<&String> = test.iter().collect();
    assert!(tr.is_disjoint(&te));
    assert_eq!(tr.len() + te.len(), 60);
    for id in &tr {
        assert_eq!(train.iter().filter(|x| x == id).count(), 120);
    }
    let m = read_json::<PreparedManifest>(&layout.prepared("manifest.json")).unwrap().data;
    assert_eq!(m.n_train, 120 * m.train_experiments);
    assert_eq!(code(d, &["train"]), 2);
}

#[test]
fn single_grid_end_to_end() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = ["all", "--experiments", "5", "--families", "rr", "--kqis", "resolution_level", "--strategies", "none"];
    ok(d, &args);
    let layout = Layout::new(d);
    let index = read_json::<Vec<TrainedEntry>>(&layout.models_dir().join("index.json")).unwrap();
    assert_eq!(index.data.len(), 1);
    assert_eq!(index.data[0].n_cells, 22);
    let cv = std::fs::read_dir(layout.cv_dir()).unwrap().collect::<Vec<_>>();
    assert_eq!(cv.len(), 1);
    let cv_path = cv[0].as_ref().unwrap().path();
    assert_eq!(lines(&cv_path).len(), 23);

    let reports = read_json::<Vec<EvaluationReport>>(&layout.report("reports.json")).unwrap();
    let mi = read_json::<MiMatrix>(&layout.report("mi.json")).unwrap();
    assert_eq!(mi.data.values.rows(), 6);
    assert_eq!(mi.data.values.cols(), 6);
    for stamp in [
        read_json::<DatasetManifest>(&layout.manifest()).unwrap().stamp(),
        read_json::<PreparedManifest>(&layout.prepared("manifest.json")).unwrap().stamp(),
        index.stamp(),
        reports.stamp(),
        mi.stamp(),
    ] {
        assert_eq!(stamp, index.stamp());
    }
    let summary = lines(&layout.report("summary.csv"));
    assert_eq!(summary.len(), 2);
    assert!(summary[1].starts_with(&index.config_hash));

    let first = std::fs::read(layout.report("summary.csv")).unwrap();
    let models = std::fs::read(layout.model(index.data[0].kqi, index.data[0].strategy, index.data[0].family)).unwrap();
    ok(d, &args);
    assert_eq!(std::fs::read(layout.report("summary.csv")).unwrap(), first);
    assert_eq!(std::fs::read(layout.model(index.data[0].kqi, index.data[0].strategy, index.data[0].family)).unwrap(), models);
}

#[test]
fn summary_ranks_and_flags_best() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["all", "--experiments", "3", "--families", "rr,knr,rf"]);
    let layout = Layout::new(d);
    let rows = lines(&layout.report("summary.csv"));
    assert_eq!(rows.len(), 1 + 6 * 3 * 3);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (kqi, pct, best) = (col("kqi"), col("mae_pct"), col("best_for_kqi"));
    let rows: Vec<Vec<String>> = rows[1..].iter().map(|r| split_quoted(r)).collect();
    for k in kqi_core::schema::KQI_COLUMNS {
        let group: Vec<&Vec<String>> = rows.iter().filter(|r| r[kqi] == k).collect();
        assert_eq!(group.len(), 9, "{k}");
        let min = group.iter().map(|r| r[pct].parse::<f64>().unwrap_or(f64::INFINITY)).fold(f64::INFINITY, f64::min);
        let flagged: Vec<&&Vec<String>> = group.iter().filter(|r| r[best] == "true").collect();
        assert_eq!(flagged.len(), 1, "{k}");
        assert_eq!(flagged[0][pct].parse::<f64>().unwrap(), min);
    }
}

fn split_quoted(line: &str) -> Vec<String> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes())
        .records()
        .next()
        .unwrap()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect()
}
