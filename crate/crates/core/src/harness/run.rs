use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{DataSource, ExperimentSpec, SyntheticSource};
use super::ledger::{Ledger, ResultRecord, RunKey};
use crate::augment::Method;
use crate::data::{
    constant_dataset, downsample_train, fit_apply_normalizer, load_csv, make_windows, split_622,
    synthetic_seasonal, Dataset, Normalizer, Splits,
};
use crate::error::{Error, Result};
use crate::model::{evaluate, train};

/// The loaded (and possibly normalized) series plus its split.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: Dataset,
    pub splits: Splits,
    pub normalizer: Option<Normalizer>,
}

pub fn load_dataset(spec: &ExperimentSpec) -> Result<Dataset> {
    let mut ds = match &spec.dataset.source {
        DataSource::Csv(path) => load_csv(path, &spec.dataset.name)?,
        DataSource::Synthetic(SyntheticSource::Seasonal {
            timesteps,
            channels,
            seed,
        }) => synthetic_seasonal(*timesteps, *channels, *seed),
        DataSource::Synthetic(SyntheticSource::Constant {
            timesteps,
            channels,
            value,
        }) => constant_dataset(*timesteps, *channels, *value),
    };
    ds.name = spec.dataset.name.clone();
    Ok(ds)
}

/// Splits 6:2:2 and, when enabled, z-scores with statistics from the full
/// training block. Cold-start runs shrink the training range later but keep
/// these statistics.
pub fn prepare(spec: &ExperimentSpec, raw: &Dataset) -> Result<PreparedData> {
    let splits = split_622(raw.timesteps(), spec.lookback)?;
    let (dataset, normalizer) = if spec.train.normalize {
        let (ds, n) = fit_apply_normalizer(raw, splits.train.clone())?;
        (ds, Some(n))
    } else {
        (raw.clone(), None)
    };
    Ok(PreparedData {
        dataset,
        splits,
        normalizer,
    })
}

fn train_range(
    spec: &ExperimentSpec,
    data: &PreparedData,
    horizon: usize,
    fraction: f64,
) -> Result<Range<usize>> {
    let full = data.splits.train.clone();
    if fraction == 1.0 {
        return Ok(full);
    }
    downsample_train(full, fraction, spec.task(horizon)?)
}

/// Trains and evaluates one (fraction, horizon, method, seed) run.
pub fn run_single(
    spec: &ExperimentSpec,
    data: &PreparedData,
    fraction: f64,
    horizon: usize,
    method: Method,
    seed: u64,
) -> Result<ResultRecord> {
    let started = Instant::now();
    let task = spec.task(horizon)?;
    let values = &data.dataset.values;
    let train_set = make_windows(values, train_range(spec, data, horizon, fraction)?, task)?;
    let val_set = make_windows(values, data.splits.val.clone(), task)?;
    let test_set = make_windows(values, data.splits.test.clone(), task)?;
    let cfg = spec.train_config(horizon, method, seed);
    let outcome = train(&train_set, &val_set, &cfg)?;
    let (mse, mae) = evaluate(&outcome.params, &test_set)?;
    Ok(ResultRecord {
        dataset: spec.dataset.name.clone(),
        fraction,
        horizon,
        method,
        seed,
        mse,
        mae,
        best_epoch: outcome.best_epoch,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Runs every (fraction, horizon, method, seed) of `spec` that the ledger
/// does not already hold, appending results as each triple finishes.
/// Returns all records of `spec` in canonical order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRecord>> {
    run_experiment_with(spec, |_| {})
}

/// As [`run_experiment`], calling `progress` for every newly computed record.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    mut progress: impl FnMut(&ResultRecord),
) -> Result<Vec<ResultRecord>> {
    let raw = load_dataset(spec)?;
    let data = prepare(spec, &raw)?;
    let mut ledger = Ledger::open(spec.ledger_path())?;
    let name = spec.dataset.name.as_str();
    let mut out = Vec::new();

    for fraction in spec.fractions() {
        for &horizon in &spec.horizons {
            for &method in &spec.methods {
                let missing: Vec<u64> = spec
                    .seeds()
                    .filter(|&s| !ledger.contains(&RunKey::new(name, fraction, horizon, method, s)))
                    .collect();
                let fresh: Vec<ResultRecord> = missing
                    .par_iter()
                    .map(|&seed| {
                        run_single(spec, &data, fraction, horizon, method, seed).map_err(|e| {
                            e.context(format!(
                                "dataset {name}, fraction {fraction}, horizon {horizon}, method {method}, seed {seed}"
                            ))
                        })
                    })
                    .collect::<Result<_>>()?;
                for r in fresh {
                    progress(&r);
                    ledger.append(r)?;
                }
                for seed in spec.seeds() {
                    let key = RunKey::new(name, fraction, horizon, method, seed);
                    let r = ledger
                        .get(&key)
                        .ok_or_else(|| Error::Config(format!("ledger lost record {key:?}")))?;
                    out.push(r.clone());
                }
            }
        }
    }
    Ok(out)
}
