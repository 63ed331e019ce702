//! TOML experiment configuration.
//!
//! ```toml
//! name = "etth1_tuned"          # optional, defaults to the dataset name
//! methods = ["none", "wave_mix"] # optional, defaults to ["none"]
//! n_repeats = 10                 # optional; seeds are 0..n_repeats
//! downsample = [0.15, 0.3]       # optional cold-start keep fractions
//! out_dir = "runs/etth1"         # optional, defaults to runs/<name>
//!
//! [dataset]
//! name = "ETTh1"
//! path = "data/ETTh1.csv"        # relative to the config file
//! # or: synthetic = { kind = "seasonal", timesteps = 4000, channels = 3, seed = 1 }
//!
//! [task]
//! horizons = [96, 192]
//! lookback = 336                 # optional, 24 for ILI and 336 otherwise
//!
//! [train]                        # every key optional
//! epochs = 30
//! patience = 12
//! batch_size = 64
//! learning_rate = 0.005
//! lr_decay = 0.5
//! kernel = 25
//! normalize = true
//!
//! [[policy]]                     # one per (horizon, augmenting method)
//! horizon = 96                   # omit to apply to every horizon
//! method = "wave_mask"
//! wavelet = "db2"
//! level = 3
//! rates = [0.5, 0.3, 0.9, 0.9]
//! sampling_rate = 0.2            # defaults to 1.0
//!
//! [[policy]]
//! horizon = 96
//! method = "freq_mask"
//! rate = 0.1
//! ```
//!
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::augment::{AugmentationPolicy, Method};
use crate::data::ForecastTask;
use crate::error::{Error, Result};
use crate::model::{TrainConfig, DEFAULT_KERNEL};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    methods: Option<Vec<String>>,
    n_repeats: Option<usize>,
    downsample: Option<Vec<f64>>,
    out_dir: Option<PathBuf>,
    dataset: RawDataset,
    task: RawTask,
    #[serde(default)]
    train: RawTrain,
    #[serde(default)]
    policy: Vec<RawPolicy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: String,
    path: Option<PathBuf>,
    synthetic: Option<SyntheticSource>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    lookback: Option<usize>,
    horizons: Vec<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    epochs: Option<usize>,
    patience: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    lr_decay: Option<f64>,
    kernel: Option<usize>,
    normalize: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    horizon: Option<usize>,
    method: String,
    wavelet: Option<String>,
    level: Option<usize>,
    rates: Option<Vec<f64>>,
    rate: Option<f64>,
    sampling_rate: Option<f64>,
}

/// Generated datasets, for tests and for runs without the benchmark files.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticSource {
    Seasonal {
        timesteps: usize,
        channels: usize,
        #[serde(default)]
        seed: u64,
    },
    Constant {
        timesteps: usize,
        channels: usize,
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic(SyntheticSource),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DataSource,
    /// CSV path as written in the config when it was relative.
    pub relative_path: Option<PathBuf>,
}

/// Training settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub kernel: usize,
    /// Z-score channels with train-split statistics.
    pub normalize: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            patience: d.patience,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            lr_decay: d.lr_decay,
            kernel: DEFAULT_KERNEL,
            normalize: true,
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub dataset: DatasetSpec,
    pub lookback: usize,
    pub horizons: Vec<usize>,
    pub methods: Vec<Method>,
    /// Exactly one entry per (horizon, augmenting method).
    pub policies: BTreeMap<(usize, Method), AugmentationPolicy>,
    pub train: TrainSettings,
    pub n_repeats: usize,
    /// Cold-start keep fractions; `None` trains on the full split only.
    pub downsample: Option<Vec<f64>>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn policy(&self, horizon: usize, method: Method) -> AugmentationPolicy {
        if method == Method::None {
            return AugmentationPolicy::none();
        }
        self.policies
            .get(&(horizon, method))
            .cloned()
            .expect("policies resolved for every (horizon, method)")
    }

    pub fn task(&self, horizon: usize) -> Result<ForecastTask> {
        ForecastTask::new(self.lookback, horizon)
    }

    pub fn train_config(&self, horizon: usize, method: Method, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            patience: self.train.patience,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            lr_decay: self.train.lr_decay,
            kernel: self.train.kernel,
            seed,
            policy: self.policy(horizon, method),
        }
    }

    pub fn seeds(&self) -> std::ops::Range<u64> {
        0..self.n_repeats as u64
    }

    /// Keep fractions to run, always ending with the full split.
    pub fn fractions(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.downsample.clone().unwrap_or_default();
        f.retain(|&v| v != 1.0);
        f.push(1.0);
        f
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.out_dir.join("ledger.jsonl")
    }

    /// `WAVAUG_OUT_DIR` replaces the output directory; with `WAVAUG_DATA_DIR`
    /// set, a CSV given by relative path is looked up by file name in that
    /// directory instead.
    pub fn apply_env_overrides(&mut self) {
        self.apply_overrides(
            std::env::var_os("WAVAUG_OUT_DIR").map(PathBuf::from),
            std::env::var_os("WAVAUG_DATA_DIR").map(PathBuf::from),
        );
    }

    pub fn apply_overrides(&mut self, out_dir: Option<PathBuf>, data_dir: Option<PathBuf>) {
        if let Some(dir) = out_dir {
            self.out_dir = dir;
        }
        let file = self
            .dataset
            .relative_path
            .as_ref()
            .and_then(|p| p.file_name());
        if let (Some(dir), Some(file)) = (data_dir, file) {
            self.dataset.source = DataSource::Csv(dir.join(file));
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Reads and resolves a config file; relative dataset paths are taken
/// relative to the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(e).context(format!("reading {}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base).map_err(|e| e.context(path.display().to_string()))
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;

    let relative_path = raw.dataset.path.clone().filter(|p| p.is_relative());
    let source = match (raw.dataset.path, raw.dataset.synthetic) {
        (Some(p), None) => DataSource::Csv(if p.is_relative() { base_dir.join(p) } else { p }),
        (None, Some(s)) => DataSource::Synthetic(s),
        (Some(_), Some(_)) => {
            return Err(cfg_err(
                "dataset takes either `path` or `synthetic`, not both",
            ))
        }
        (None, None) => return Err(cfg_err("dataset needs `path` or `synthetic`")),
    };
    let dataset = DatasetSpec {
        name: raw.dataset.name,
        source,
        relative_path,
    };

    let lookback = raw
        .task
        .lookback
        .unwrap_or_else(|| ForecastTask::default_lookback(&dataset.name));
    if raw.task.horizons.is_empty() {
        return Err(cfg_err("task.horizons is empty"));
    }
    let horizons = raw.task.horizons;
    for &h in &horizons {
        ForecastTask::new(lookback, h)?;
    }
    let distinct: std::collections::BTreeSet<_> = horizons.iter().collect();
    if distinct.len() != horizons.len() {
        return Err(cfg_err("task.horizons contains duplicates"));
    }

    let methods: Vec<Method> = match raw.methods {
        None => vec![Method::None],
        Some(names) => names.iter().map(|n| n.parse()).collect::<Result<_>>()?,
    };
    if methods.is_empty() {
        return Err(cfg_err("methods is empty"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in &methods {
        if !seen.insert(*m) {
            return Err(cfg_err(format!("method `{m}` listed twice")));
        }
    }

    let defaults = TrainSettings::default();
    let t = raw.train;
    let train = TrainSettings {
        epochs: t.epochs.unwrap_or(defaults.epochs),
        patience: t.patience.unwrap_or(defaults.patience),
        batch_size: t.batch_size.unwrap_or(defaults.batch_size),
        learning_rate: t.learning_rate.unwrap_or(defaults.learning_rate),
        lr_decay: t.lr_decay.unwrap_or(defaults.lr_decay),
        kernel: t.kernel.unwrap_or(defaults.kernel),
        normalize: t.normalize.unwrap_or(defaults.normalize),
    };

    let mut explicit: BTreeMap<(usize, Method), AugmentationPolicy> = BTreeMap::new();
    let mut fallback: BTreeMap<Method, AugmentationPolicy> = BTreeMap::new();
    for (i, p) in raw.policy.into_iter().enumerate() {
        let ctx = |e: Error| e.context(format!("policy #{}", i + 1));
        let method: Method = p.method.parse().map_err(ctx)?;
        let sampling = p.sampling_rate.unwrap_or(1.0);
        let policy = match method {
            Method::None => return Err(ctx(cfg_err("method `none` takes no policy"))),
            Method::WaveMask | Method::WaveMix => {
                if p.rate.is_some() {
                    return Err(ctx(cfg_err("wavelet methods take `rates`, not `rate`")));
                }
                let wavelet = p.wavelet.ok_or_else(|| ctx(cfg_err("missing `wavelet`")))?;
                let level = p.level.ok_or_else(|| ctx(cfg_err("missing `level`")))?;
                let rates = p.rates.ok_or_else(|| ctx(cfg_err("missing `rates`")))?;
                AugmentationPolicy::wavelet(method, &wavelet, level, rates, sampling)
                    .map_err(ctx)?
            }
            Method::FreqMask | Method::FreqMix => {
                if p.wavelet.is_some() || p.level.is_some() || p.rates.is_some() {
                    return Err(ctx(cfg_err("Fourier methods take a single `rate`")));
                }
                let rate = p.rate.ok_or_else(|| ctx(cfg_err("missing `rate`")))?;
                AugmentationPolicy::fourier(method, rate, sampling).map_err(ctx)?
            }
        };
        let duplicate = match p.horizon {
            Some(h) => {
                if !horizons.contains(&h) {
                    return Err(ctx(cfg_err(format!("horizon {h} is not in task.horizons"))));
                }
                explicit.insert((h, method), policy).is_some()
            }
            None => fallback.insert(method, policy).is_some(),
        };
        if duplicate {
            return Err(ctx(cfg_err(format!("second policy for {method}"))));
        }
    }

    let mut policies = BTreeMap::new();
    for &h in &horizons {
        for &m in methods.iter().filter(|m| **m != Method::None) {
            let p = explicit
                .get(&(h, m))
                .or_else(|| fallback.get(&m))
                .cloned()
                .ok_or_else(|| cfg_err(format!("no policy for method {m} at horizon {h}")))?;
            policies.insert((h, m), p);
        }
    }

    let n_repeats = raw.n_repeats.unwrap_or(10);
    if n_repeats == 0 {
        return Err(cfg_err("n_repeats must be at least 1"));
    }
    if let Some(fracs) = &raw.downsample {
        for &f in fracs {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidFraction(f));
            }
        }
    }

    let name = raw.name.unwrap_or_else(|| dataset.name.clone());
    let out_dir = raw
        .out_dir
        .unwrap_or_else(|| PathBuf::from("runs").join(&name));

    let spec = ExperimentSpec {
        name,
        dataset,
        lookback,
        horizons,
        methods,
        policies,
        train,
        n_repeats,
        downsample: raw.downsample,
        out_dir,
    };
    for &h in &spec.horizons {
        for &m in &spec.methods {
            spec.train_config(h, m, 0).validate()?;
        }
    }
    Ok(spec)
}
