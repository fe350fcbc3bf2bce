//! CSV encodings of the sample stream and of prepared matrices.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use kqi_core::preprocess::Rejection;
use kqi_core::schema::{
    Bandwidth, DatasetMatrix, Granularity, KpiVector, Kqi, KqiVector, PowerScenario, Sample, ScenarioConfig,
    SplitTag, Technology, KQI_COLUMNS,
};
use kqi_core::Matrix;

use crate::error::{Error, Result};

/// Column order of the sample stream.
pub const SAMPLE_HEADER: [&str; 23] = [
    "experiment_id",
    "t_s",
    "technology",
    "bandwidth_mhz",
    "power_scenario",
    "tx_power_db",
    "noise_db",
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
    "resolution_level",
    "frame_rate_fps",
    "initial_startup_ms",
    "avg_stall_ms",
    "client_throughput_mbps",
    "latency_ms",
];

/// Shortest decimal that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn sample_row(s: &Sample) -> [String; 23] {
    let k = &s.kpis;
    let q = &s.kqis;
    [
        s.experiment_id.to_string(),
        s.t_s.to_string(),
        s.config.technology.as_str().into(),
        s.config.bandwidth.mhz().to_string(),
        s.config.power_scenario.as_str().into(),
        fmt_f64(s.config.tx_power_db),
        fmt_f64(s.config.noise_db),
        fmt_f64(k.dl_throughput_mbps),
        fmt_f64(k.ul_throughput_mbps),
        k.dl_retx_count.to_string(),
        k.ul_retx_count.to_string(),
        fmt_f64(k.sinr_db),
        fmt_f64(k.rsrp_dbm),
        fmt_f64(k.carrier_freq_mhz),
        fmt_f64(k.channel_util),
        fmt_f64(k.cpe_wifi_rssi_dbm),
        fmt_f64(k.cpe_link_rate_mbps),
        q.resolution_level.to_string(),
        fmt_f64(q.frame_rate_fps),
        fmt_f64(q.initial_startup_ms),
        fmt_f64(q.avg_stall_ms),
        fmt_f64(q.client_throughput_mbps),
        fmt_f64(q.latency_ms),
    ]
}

pub fn write_samples<W: Write>(out: W, samples: &[Sample]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SAMPLE_HEADER)?;
    for s in samples {
        w.write_record(sample_row(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples_file(path: &Path, samples: &[Sample]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_samples(BufWriter::new(f), samples).map_err(|e| Error::csv(path, e))
}

/// Parsed rows plus the rows that could not be typed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleTable {
    pub samples: Vec<Sample>,
    pub rejections: Vec<Rejection>,
}

fn core_reason(e: kqi_core::Error) -> String {
    match e {
        kqi_core::Error::Schema(s) => s,
        other => other.to_string(),
    }
}

struct RowParser<'a> {
    rec: &'a csv::StringRecord,
    idx: &'a [usize; 23],
}

impl RowParser<'_> {
    fn raw(&self, col: usize) -> &str {
        self.rec.get(self.idx[col]).unwrap_or("").trim()
    }

    fn num<T: FromStr>(&self, col: usize) -> std::result::Result<T, String> {
        let s = self.raw(col);
        s.parse().map_err(|_| format!("{}: cannot parse {s:?}", SAMPLE_HEADER[col]))
    }

    fn sample(&self) -> std::result::Result<Sample, String> {
        let bandwidth = Bandwidth::try_from(self.num::<u32>(3)?).map_err(core_reason)?;
        let config = ScenarioConfig {
            technology: Technology::from_str(self.raw(2)).map_err(core_reason)?,
            bandwidth,
            power_scenario: PowerScenario::from_str(self.raw(4)).map_err(core_reason)?,
            tx_power_db: self.num(5)?,
            noise_db: self.num(6)?,
        };
        let kpis = KpiVector {
            dl_throughput_mbps: self.num(7)?,
            ul_throughput_mbps: self.num(8)?,
            dl_retx_count: self.num(9)?,
            ul_retx_count: self.num(10)?,
            sinr_db: self.num(11)?,
            rsrp_dbm: self.num(12)?,
            carrier_freq_mhz: self.num(13)?,
            channel_util: self.num(14)?,
            cpe_wifi_rssi_dbm: self.num(15)?,
            cpe_link_rate_mbps: self.num(16)?,
        };
        let kqis = KqiVector {
            resolution_level: self.num(17)?,
            frame_rate_fps: self.num(18)?,
            initial_startup_ms: self.num(19)?,
            avg_stall_ms: self.num(20)?,
            client_throughput_mbps: self.num(21)?,
            latency_ms: self.num(22)?,
        };
        let s = Sample { experiment_id: self.num(0)?, t_s: self.num(1)?, config, kpis, kqis };
        s.validate_schema().map_err(core_reason)?;
        Ok(s)
    }
}

fn header_index(header: &csv::StringRecord) -> std::result::Result<[usize; 23], kqi_core::Error> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if let Some(u) = names.iter().find(|n| !SAMPLE_HEADER.contains(n)) {
        return Err(kqi_core::Error::Schema(format!("unknown column {u:?}")));
    }
    let mut idx = [0; 23];
    for (c, name) in SAMPLE_HEADER.iter().enumerate() {
        let found: Vec<usize> = names.iter().enumerate().filter(|(_, n)| *n == name).map(|(i, _)| i).collect();
        match found.as_slice() {
            [i] => idx[c] = *i,
            [] => return Err(kqi_core::Error::Schema(format!("missing column {name:?}"))),
            _ => return Err(kqi_core::Error::Schema(format!("duplicate column {name:?}"))),
        }
    }
    Ok(idx)
}

/// Reads a sample stream; rows that fail to type are returned as rejections
/// rather than aborting the read.
pub fn read_samples<R: Read>(input: R, path: &Path) -> Result<SampleTable> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx = header_index(&header)?;
    let mut table = SampleTable::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let p = RowParser { rec: &rec, idx: &idx };
        if rec.len() != SAMPLE_HEADER.len() {
            table.rejections.push(Rejection {
                line,
                experiment_id: p.num(0).ok(),
                reason: format!("expected {} fields, found {}", SAMPLE_HEADER.len(), rec.len()),
            });
            continue;
        }
        match p.sample() {
            Ok(s) => table.samples.push(s),
            Err(reason) => table.rejections.push(Rejection { line, experiment_id: p.num(0).ok(), reason }),
        }
    }
    Ok(table)
}

pub fn read_samples_file(path: &Path) -> Result<SampleTable> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(std::io::BufReader::new(f), path)
}

/// Writes `experiment_id`, the feature columns, then every KQI target.
pub fn write_matrix_file(path: &Path, m: &DatasetMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(f));
    let kqis: Vec<Kqi> = m.targets.keys().copied().collect();
    let mut header = vec!["experiment_id".to_string()];
    header.extend(m.feature_names.iter().cloned());
    header.extend(kqis.iter().map(|k| k.name().to_string()));
    let wrap = |e| Error::csv(path, e);
    w.write_record(&header).map_err(wrap)?;
    for i in 0..m.n_rows() {
        let mut row = vec![m.experiment_ids[i].to_string()];
        row.extend(m.x.row(i).iter().map(|&v| fmt_f64(v)));
        row.extend(kqis.iter().map(|k| fmt_f64(m.targets[k][i])));
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Inverse of [`write_matrix_file`]; columns named after a KQI become targets.
pub fn read_matrix_file(path: &Path, tag: SplitTag, granularity: Granularity) -> Result<DatasetMatrix> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(f));
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.get(0) != Some("experiment_id") {
        return Err(Error::format(path, "first column must be experiment_id"));
    }
    let mut feature_cols = Vec::new();
    let mut target_cols = Vec::new();
    for (i, name) in header.iter().enumerate().skip(1) {
        if KQI_COLUMNS.contains(&name) {
            target_cols.push((i, Kqi::from_str(name)?));
        } else {
            feature_cols.push(i);
        }
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut targets: BTreeMap<Kqi, Vec<f64>> = target_cols.iter().map(|(_, k)| (*k, Vec::new())).collect();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::format(path, format!("line {line}: cannot parse {:?}", &rec[i])))
        };
        ids.push(rec[0].parse().map_err(|_| Error::format(path, format!("line {line}: bad experiment_id")))?);
        for &c in &feature_cols {
            data.push(num(c)?);
        }
        for (c, k) in &target_cols {
            targets.get_mut(k).expect("declared").push(num(*c)?);
        }
    }
    let m = DatasetMatrix {
        feature_names: feature_cols.iter().map(|&i| header[i].to_string()).collect(),
        x: Matrix::from_vec(ids.len(), feature_cols.len(), data)?,
        targets,
        split_tag: tag,
        granularity,
        experiment_ids: ids,
    };
    m.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kqi_core::simulator::{simulate_session, SimulatorParams};

    fn session() -> Vec<Sample> {
        let cfg = ScenarioConfig::new(Bandwidth::Mhz10, PowerScenario::MinPt);
        simulate_session(&cfg, &SimulatorParams::default(), 3, 9).unwrap()
    }

    #[test]
    fn samples_round_trip_exactly() {
        let s = session();
        let mut buf = Vec::new();
        write_samples(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&SAMPLE_HEADER.join(",")));
        assert!(!text.contains('\r'));
        let back = read_samples(buf.as_slice(), Path::new("mem")).unwrap();
        assert!(back.rejections.is_empty());
        assert_eq!(back.samples, s);
    }

    #[test]
    fn bad_rows_become_rejections() {
        let s = session();
        let mut buf = Vec::new();
        write_samples(&mut buf, &s[..3]).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen(",10,MinPT,", ",7,MinPT,", 1);
        let back = read_samples(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(back.samples.len(), 2);
        assert_eq!(back.rejections.len(), 1);
        assert_eq!(back.rejections[0].line, 2);
        assert_eq!(back.rejections[0].experiment_id, Some(3));
        assert_eq!(back.rejections[0].reason, "bandwidth not in {5,10,15,20}");
    }

    #[test]
    fn header_problems_are_schema_errors() {
        let missing = SAMPLE_HEADER[..22].join(",") + "\n";
        let e = read_samples(missing.as_bytes(), Path::new("mem")).unwrap_err();
        assert!(e.to_string().contains("latency_ms"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let extra = SAMPLE_HEADER.join(",") + ",bogus\n";
        let e = read_samples(extra.as_bytes(), Path::new("mem")).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn special_floats_are_spelled_out() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!("inf".parse::<f64>().unwrap(), f64::INFINITY);
        assert_eq!("NaN".parse::<f64>().map(f64::is_nan), Ok(true));
    }
}
