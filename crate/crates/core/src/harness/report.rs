//! Aggregation over seeds and CSV report files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::ledger::ResultRecord;
use crate::augment::Method;
use crate::error::{Error, Result};

/// Mean and sample standard deviation over the seeds of one
/// (dataset, fraction, horizon, method) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub dataset: String,
    pub fraction: f64,
    pub horizon: usize,
    pub method: Method,
    pub n: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    /// 1 for the lowest mean MSE among methods of the same
    /// (dataset, fraction, horizon), 2 for the runner-up, and so on.
    pub rank: usize,
}

impl Aggregate {
    pub fn is_best(&self) -> bool {
        self.rank == 1
    }

    pub fn is_second(&self) -> bool {
        self.rank == 2
    }
}

/// `(mean, std)` with the n-1 denominator; std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

type GroupKey = (String, u64, usize, Method);

pub fn aggregate(records: &[ResultRecord]) -> Result<Vec<Aggregate>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    // fractions are positive, so bit order is numeric order
    let mut groups: BTreeMap<GroupKey, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        groups
            .entry((r.dataset.clone(), r.fraction.to_bits(), r.horizon, r.method))
            .or_default()
            .push(r);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((dataset, fbits, horizon, method), rs) in groups {
        let mse: Vec<f64> = rs.iter().map(|r| r.mse).collect();
        let mae: Vec<f64> = rs.iter().map(|r| r.mae).collect();
        let (mse_mean, mse_std) = mean_std(&mse)?;
        let (mae_mean, mae_std) = mean_std(&mae)?;
        out.push(Aggregate {
            dataset,
            fraction: f64::from_bits(fbits),
            horizon,
            method,
            n: rs.len(),
            mse_mean,
            mse_std,
            mae_mean,
            mae_std,
            rank: 0,
        });
    }
    assign_ranks(&mut out);
    Ok(out)
}

fn assign_ranks(aggs: &mut [Aggregate]) {
    let mut rows: BTreeMap<(String, u64, usize), Vec<usize>> = BTreeMap::new();
    for (i, a) in aggs.iter().enumerate() {
        rows.entry((a.dataset.clone(), a.fraction.to_bits(), a.horizon))
            .or_default()
            .push(i);
    }
    for idx in rows.values_mut() {
        idx.sort_by(|&a, &b| {
            aggs[a]
                .mse_mean
                .total_cmp(&aggs[b].mse_mean)
                .then(aggs[a].method.cmp(&aggs[b].method))
        });
        for (r, &i) in idx.iter().enumerate() {
            aggs[i].rank = r + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!(
                "unknown report format `{other}` (supported: csv)"
            ))),
        }
    }
}

/// One point of the cold-start plot data: the lowest mean MSE within each
/// augmentation family at a given keep fraction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColdStartPoint {
    pub dataset: String,
    pub horizon: usize,
    pub fraction: f64,
    pub wave_mse: Option<f64>,
    pub freq_mse: Option<f64>,
    pub none_mse: Option<f64>,
}

fn min_opt(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.min(v)))
}

pub fn coldstart_points(aggs: &[Aggregate]) -> Vec<ColdStartPoint> {
    let mut points: BTreeMap<(String, usize, u64), ColdStartPoint> = BTreeMap::new();
    for a in aggs {
        let p = points
            .entry((a.dataset.clone(), a.horizon, a.fraction.to_bits()))
            .or_insert_with(|| ColdStartPoint {
                dataset: a.dataset.clone(),
                horizon: a.horizon,
                fraction: a.fraction,
                wave_mse: None,
                freq_mse: None,
                none_mse: None,
            });
        if a.method.is_wavelet() {
            p.wave_mse = min_opt(p.wave_mse, a.mse_mean);
        } else if a.method.is_fourier() {
            p.freq_mse = min_opt(p.freq_mse, a.mse_mean);
        } else {
            p.none_mse = Some(a.mse_mean);
        }
    }
    points.into_values().collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `metrics.csv` for full-data groups and, when any group ran on a
/// reduced training split, `metrics_coldstart.csv` plus one
/// `coldstart_<dataset>.csv` plot-data file per dataset. Returns the paths
/// written.
pub fn emit_report(
    aggs: &[Aggregate],
    out_dir: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<Vec<PathBuf>> {
    let ReportFormat::Csv = format;
    if aggs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(e).context(format!("creating {}", out_dir.display())))?;
    let mut written = Vec::new();

    let full: Vec<&Aggregate> = aggs.iter().filter(|a| a.fraction == 1.0).collect();
    if !full.is_empty() {
        let path = out_dir.join("metrics.csv");
        let mut w = csv_writer(&path)?;
        let header = [
            "dataset", "horizon", "method", "mse_mean", "mse_std", "mae_mean", "mae_std", "rank",
        ];
        w.write_record(header).map_err(|e| csv_err(&path, e))?;
        for a in full {
            w.write_record([
                a.dataset.clone(),
                a.horizon.to_string(),
                a.method.to_string(),
                a.mse_mean.to_string(),
                a.mse_std.to_string(),
                a.mae_mean.to_string(),
                a.mae_std.to_string(),
                a.rank.to_string(),
            ])
            .map_err(|e| csv_err(&path, e))?;
        }
        w.flush()?;
        written.push(path);
    }

    if aggs.iter().any(|a| a.fraction != 1.0) {
        let path = out_dir.join("metrics_coldstart.csv");
        let mut w = csv_writer(&path)?;
        w.write_record([
            "dataset", "fraction", "horizon", "method", "mse_mean", "mse_std", "mae_mean",
            "mae_std", "rank",
        ])
        .map_err(|e| csv_err(&path, e))?;
        for a in aggs {
            w.write_record([
                a.dataset.clone(),
                a.fraction.to_string(),
                a.horizon.to_string(),
                a.method.to_string(),
                a.mse_mean.to_string(),
                a.mse_std.to_string(),
                a.mae_mean.to_string(),
                a.mae_std.to_string(),
                a.rank.to_string(),
            ])
            .map_err(|e| csv_err(&path, e))?;
        }
        w.flush()?;
        written.push(path);

        let points = coldstart_points(aggs);
        let mut by_dataset: BTreeMap<&str, Vec<&ColdStartPoint>> = BTreeMap::new();
        for p in &points {
            by_dataset.entry(p.dataset.as_str()).or_default().push(p);
        }
        for (ds, pts) in by_dataset {
            let path = out_dir.join(format!("coldstart_{}.csv", sanitize(ds)));
            let mut w = csv_writer(&path)?;
            w.write_record(["horizon", "fraction", "wave_mse", "freq_mse", "none_mse"])
                .map_err(|e| csv_err(&path, e))?;
            for p in pts {
                w.write_record([
                    p.horizon.to_string(),
                    p.fraction.to_string(),
                    opt(p.wave_mse),
                    opt(p.freq_mse),
                    opt(p.none_mse),
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
