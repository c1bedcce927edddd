//! CSV persistence for regret traces and timing reports.
//!
//! Floats are written in scientific notation with 9 significant digits, so a
//! trace read back equals the written one after rounding to that precision.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::bench::TimingReport;
use super::simulate::{RegretTrace, TracePoint};
use crate::error::{Error, Result};

pub const REGRET_HEADER: [&str; 4] = ["policy", "t", "mean_regret", "stderr"];
pub const TIMING_HEADER: [&str; 5] = ["policy", "calls", "median_ns", "mean_ns", "p99_ns"];

/// 9 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// `x` rounded to the precision stored in a CSV file.
pub fn round_stored(x: f64) -> f64 {
    format_float(x).parse().expect("formatted float parses")
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// Regret rows sorted by (policy, t).
pub fn regret_rows(traces: &[RegretTrace]) -> Vec<[String; 4]> {
    let mut rows: Vec<(&str, &TracePoint)> = traces
        .iter()
        .flat_map(|tr| tr.points.iter().map(move |p| (tr.policy.as_str(), p)))
        .collect();
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.t.cmp(&b.1.t)));
    rows.into_iter()
        .map(|(policy, p)| {
            [policy.to_string(), p.t.to_string(), format_float(p.mean_regret), format_float(p.stderr)]
        })
        .collect()
}

pub fn write_regret<W: Write>(out: W, traces: &[RegretTrace]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGRET_HEADER)?;
    for row in regret_rows(traces) {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_regret_csv(traces: &[RegretTrace], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    write_regret(file, traces).map_err(csv_err(path))
}

pub fn write_timing_csv(reports: &[TimingReport], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(TIMING_HEADER).map_err(csv_err(path))?;
    for r in reports {
        w.write_record([
            r.policy.clone(),
            r.calls.to_string(),
            format_float(r.median_ns),
            format_float(r.mean_ns),
            format_float(r.p99_ns),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut r = csv::Reader::from_reader(file);
    let found = r.headers().map_err(csv_err(path))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected header `{}`", path.display(), found.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Config(format!("{}: bad field {i} in `{}`", path.display(), rec.iter().collect::<Vec<_>>().join(","))))
}

/// Reads a regret CSV back into traces, one per policy in file order.
pub fn read_regret_csv(path: &Path) -> Result<Vec<RegretTrace>> {
    let mut traces: Vec<RegretTrace> = Vec::new();
    for rec in open(path, &REGRET_HEADER)?.records() {
        let rec = rec.map_err(csv_err(path))?;
        let policy: String = field(path, &rec, 0)?;
        let point = TracePoint {
            t: field(path, &rec, 1)?,
            mean_regret: field(path, &rec, 2)?,
            stderr: field(path, &rec, 3)?,
        };
        match traces.last_mut() {
            Some(tr) if tr.policy == policy => tr.points.push(point),
            _ => traces.push(RegretTrace { policy, points: vec![point] }),
        }
    }
    Ok(traces)
}

pub fn read_timing_csv(path: &Path) -> Result<Vec<TimingReport>> {
    open(path, &TIMING_HEADER)?
        .records()
        .map(|rec| {
            let rec = rec.map_err(csv_err(path))?;
            Ok(TimingReport {
                policy: field(path, &rec, 0)?,
                calls: field(path, &rec, 1)?,
                median_ns: field(path, &rec, 2)?,
                mean_ns: field(path, &rec, 3)?,
                p99_ns: field(path, &rec, 4)?,
            })
        })
        .collect()
}
