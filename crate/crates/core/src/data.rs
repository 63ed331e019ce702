//! Dataset ingestion, chronological splitting, z-score normalization and
//! sliding-window construction.

use std::ops::Range;
use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::SeriesTensor;

/// A multivariate series: `values` is `(timesteps, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub channel_names: Vec<String>,
    pub timestamps: Vec<String>,
    pub values: Array2<f64>,
}

impl Dataset {
    pub fn timesteps(&self) -> usize {
        self.values.nrows()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }
}

/// Look-back and horizon lengths for one forecasting task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastTask {
    pub lookback: usize,
    pub horizon: usize,
}

impl ForecastTask {
    pub fn new(lookback: usize, horizon: usize) -> Result<Self> {
        if lookback == 0 || horizon == 0 {
            return Err(Error::Config(format!(
                "look-back ({lookback}) and horizon ({horizon}) must be positive"
            )));
        }
        Ok(Self { lookback, horizon })
    }

    pub fn window_len(&self) -> usize {
        self.lookback + self.horizon
    }

    /// Standard look-back for a dataset: 24 for the weekly ILI series, 336
    /// otherwise.
    pub fn default_lookback(dataset_name: &str) -> usize {
        let lower = dataset_name.to_ascii_lowercase();
        if lower == "ili" || lower.contains("illness") {
            24
        } else {
            336
        }
    }

    /// Standard horizon grid matching [`Self::default_lookback`].
    pub fn default_horizons(dataset_name: &str) -> Vec<usize> {
        if Self::default_lookback(dataset_name) == 24 {
            vec![24, 36, 48, 60]
        } else {
            vec![96, 192, 336, 720]
        }
    }
}

/// Reads a CSV whose first column is a timestamp label and whose remaining
/// columns are numeric channels.
pub fn load_csv(path: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(e).context(format!("opening {}", path.display())))?;
    read_csv(file, path, name)
}

fn read_csv<R: std::io::Read>(reader: R, path: &Path, name: &str) -> Result<Dataset> {
    let csv_err = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    if headers.len() < 2 {
        return Err(csv_err(
            1,
            "need a timestamp column and at least one channel".into(),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h.trim()) {
            return Err(csv_err(1, format!("duplicate header `{}`", h.trim())));
        }
    }
    let channel_names: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|h| h.trim().to_string())
        .collect();
    let k = channel_names.len();

    let mut timestamps = Vec::new();
    let mut flat = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        timestamps.push(record[0].trim().to_string());
        for (c, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| {
                csv_err(
                    line,
                    format!(
                        "column {} (`{}`): `{cell}` is not a number",
                        c + 2,
                        channel_names[c]
                    ),
                )
            })?;
            if !v.is_finite() {
                return Err(csv_err(
                    line,
                    format!(
                        "column {} (`{}`): missing or non-finite value `{cell}`",
                        c + 2,
                        channel_names[c]
                    ),
                ));
            }
            flat.push(v);
        }
    }
    let t = timestamps.len();
    let values =
        Array2::from_shape_vec((t, k), flat).expect("row lengths validated by the csv reader");
    Ok(Dataset {
        name: name.to_string(),
        channel_names,
        timestamps,
        values,
    })
}

/// Train/validation/test ranges over the time axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Range<usize>,
    /// Starts `lookback` steps before the validation block so its first
    /// window has a full look-back.
    pub val: Range<usize>,
    /// Same border convention as `val`.
    pub test: Range<usize>,
    /// Sizes of the three disjoint blocks before the border extension.
    pub sizes: (usize, usize, usize),
}

/// Chronological 6:2:2 split: `floor(0.6 T)`, `floor(0.2 T)`, remainder.
pub fn split_622(timesteps: usize, lookback: usize) -> Result<Splits> {
    if timesteps < 10 {
        return Err(Error::DatasetTooShort(timesteps));
    }
    let n_train = timesteps * 6 / 10;
    let n_val = timesteps * 2 / 10;
    let n_test = timesteps - n_train - n_val;
    let val_start = n_train;
    let test_start = n_train + n_val;
    Ok(Splits {
        train: 0..n_train,
        val: val_start.saturating_sub(lookback)..test_start,
        test: test_start.saturating_sub(lookback)..timesteps,
        sizes: (n_train, n_val, n_test),
    })
}

/// Per-channel z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Fits mean and population standard deviation on `rows` of `values`.
    pub fn fit(
        values: ArrayView2<f64>,
        rows: Range<usize>,
        channel_names: &[String],
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        let block = values.slice(s![rows, ..]);
        let n = block.nrows() as f64;
        let mut mean = Vec::with_capacity(block.ncols());
        let mut std = Vec::with_capacity(block.ncols());
        for (c, col) in block.columns().into_iter().enumerate() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd.is_nan() || sd <= 1e-12 * mu.abs().max(1.0) {
                return Err(Error::ZeroVariance {
                    channel: c,
                    name: channel_names.get(c).cloned().unwrap_or_default(),
                });
            }
            mean.push(mu);
            std.push(sd);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (c, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.mean[c]) / self.std[c]);
        }
        out
    }

    pub fn invert(&self, values: &Array2<f64>) -> Array2<f64> {
        let mut out = values.clone();
        for (c, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v * self.std[c] + self.mean[c]);
        }
        out
    }
}

/// Fits a normalizer on `train` rows only and applies it to the whole series.
pub fn fit_apply_normalizer(ds: &Dataset, train: Range<usize>) -> Result<(Dataset, Normalizer)> {
    let norm = Normalizer::fit(ds.values.view(), train, &ds.channel_names)?;
    let mut out = ds.clone();
    out.values = norm.apply(&ds.values);
    Ok((out, norm))
}

/// Paired look-back and horizon windows: `x` is `(n, lookback, k)`, `y` is
/// `(n, horizon, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Windows {
    pub x: SeriesTensor,
    pub y: SeriesTensor,
}

impl Windows {
    pub fn len(&self) -> usize {
        self.x.len_of(Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Windows {
        Windows {
            x: self.x.select(Axis(0), idx),
            y: self.y.select(Axis(0), idx),
        }
    }
}

/// Stride-1 windows over `range`: window `i` reads look-back rows
/// `[i, i + lookback)` and horizon rows `[i + lookback, i + lookback + horizon)`
/// relative to `range.start`.
pub fn make_windows(
    values: &Array2<f64>,
    range: Range<usize>,
    task: ForecastTask,
) -> Result<Windows> {
    let len = range.len();
    let need = task.window_len();
    if len < need || range.end > values.nrows() {
        return Err(Error::RangeTooShort {
            len,
            needed: need,
            lookback: task.lookback,
            horizon: task.horizon,
        });
    }
    let n = len - need + 1;
    let k = values.ncols();
    let mut x = SeriesTensor::zeros((n, task.lookback, k));
    let mut y = SeriesTensor::zeros((n, task.horizon, k));
    for i in 0..n {
        let start = range.start + i;
        x.slice_mut(s![i, .., ..])
            .assign(&values.slice(s![start..start + task.lookback, ..]));
        y.slice_mut(s![i, .., ..])
            .assign(&values.slice(s![start + task.lookback..start + need, ..]));
    }
    Ok(Windows { x, y })
}

/// Keeps the most recent `floor(keep_fraction * len)` steps of the training
/// range.
pub fn downsample_train(
    train: Range<usize>,
    keep_fraction: f64,
    task: ForecastTask,
) -> Result<Range<usize>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidFraction(keep_fraction));
    }
    let keep = (keep_fraction * train.len() as f64).floor() as usize;
    let keep = keep.min(train.len());
    if keep < task.window_len() {
        return Err(Error::RangeTooShort {
            len: keep,
            needed: task.window_len(),
            lookback: task.lookback,
            horizon: task.horizon,
        });
    }
    Ok(train.end - keep..train.end)
}

/// Every channel holds `value`.
pub fn constant_dataset(timesteps: usize, channels: usize, value: f64) -> Dataset {
    Dataset {
        name: "constant".into(),
        channel_names: (0..channels).map(|c| format!("c{c}")).collect(),
        timestamps: (0..timesteps).map(|t| t.to_string()).collect(),
        values: Array2::from_elem((timesteps, channels), value),
    }
}

/// Hourly-like synthetic series: daily and weekly cycles, a slow drift and
/// AR(1) noise, with channel-specific amplitudes and phases.
pub fn synthetic_seasonal(timesteps: usize, channels: usize, seed: u64) -> Dataset {
    use std::f64::consts::TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((timesteps, channels));
    for mut col in values.columns_mut() {
        let a_day = rng.gen_range(0.5..2.0);
        let a_week = rng.gen_range(0.2..1.0);
        let a_half = rng.gen_range(0.0..0.5);
        let phase_day = rng.gen_range(0.0..TAU);
        let phase_week = rng.gen_range(0.0..TAU);
        let drift = rng.gen_range(-1.0..1.0) / timesteps.max(1) as f64;
        let noise_scale = rng.gen_range(0.2..0.4);
        let mut ar = 0.0;
        for (t, v) in col.iter_mut().enumerate() {
            let tf = t as f64;
            let e: f64 = rng.gen_range(-1.0..1.0);
            ar = 0.7 * ar + noise_scale * e;
            *v = a_day * (TAU * tf / 24.0 + phase_day).sin()
                + a_half * (TAU * tf / 12.0).cos()
                + a_week * (TAU * tf / 168.0 + phase_week).sin()
                + drift * tf
                + ar;
        }
    }
    Dataset {
        name: "synthetic_seasonal".into(),
        channel_names: (0..channels).map(|c| format!("c{c}")).collect(),
        timestamps: (0..timesteps).map(|t| t.to_string()).collect(),
        values,
    }
}
