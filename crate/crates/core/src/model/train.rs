use ndarray::{s, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    adam_step, dlinear_backward, dlinear_forward, AdamState, DLinearParams, DEFAULT_KERNEL,
};
use crate::augment::{augment_training_batch, AugmentationPolicy};
use crate::data::Windows;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate multiplier applied after every epoch; `1.0` disables
    /// the schedule.
    pub lr_decay: f64,
    pub kernel: usize,
    pub seed: u64,
    pub policy: AugmentationPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            patience: 12,
            batch_size: 64,
            learning_rate: 0.005,
            lr_decay: 0.5,
            kernel: DEFAULT_KERNEL,
            seed: 0,
            policy: AugmentationPolicy::none(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTrainConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.patience > self.epochs {
            return bad(format!(
                "patience {} exceeds epochs {}",
                self.patience, self.epochs
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return bad(format!("lr_decay {} must be positive", self.lr_decay));
        }
        self.policy.validate()
    }

    /// Learning rate used during `epoch` (1-based).
    pub fn lr_for_epoch(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32 - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Mean batch loss over the (augmented) training batches.
    pub train_loss: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation MSE.
    pub params: DLinearParams,
    /// 1-based; 0 when no epoch produced a finite validation loss.
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub history: Vec<EpochStats>,
}

/// Adam training with per-epoch shuffling, training-only augmentation,
/// validation-based model selection and early stopping.
pub fn train(train_set: &Windows, val_set: &Windows, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    let (_, lookback, k) = train_set.x.dim();
    let horizon = train_set.y.len_of(Axis(1));
    if val_set.x.dim().1 != lookback || val_set.y.dim().1 != horizon || val_set.x.dim().2 != k {
        return Err(Error::ShapeMismatch {
            expected: vec![val_set.len(), lookback, k],
            actual: val_set.x.shape().to_vec(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = DLinearParams::init(lookback, horizon, cfg.kernel, &mut rng);
    let mut adam = AdamState::new(&params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = cfg.lr_for_epoch(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train_set.select(chunk);
            let (x, y) = augment_training_batch(&batch.x, &batch.y, &cfg.policy, &mut rng)?;
            let (loss, grads) = dlinear_backward(&params, &x, &y)?;
            adam_step(&mut params, &grads, &mut adam, lr)?;
            loss_sum += loss;
            batches += 1;
        }
        let (val_mse, _) = evaluate(&params, val_set)?;
        history.push(EpochStats {
            epoch,
            lr,
            train_loss: loss_sum / batches as f64,
            val_mse,
        });
        if val_mse < best_val {
            best_val = val_mse;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        params: best,
        best_epoch,
        best_val_mse: best_val,
        history,
    })
}

const EVAL_CHUNK: usize = 256;

/// `(mse, mae)` over every window, un-augmented.
pub fn evaluate(params: &DLinearParams, set: &Windows) -> Result<(f64, f64)> {
    if set.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    let n = set.len();
    let (mut se, mut ae, mut count) = (0.0, 0.0, 0usize);
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let x = set.x.slice(s![start..end, .., ..]).to_owned();
        let pred = dlinear_forward(params, &x)?;
        let target = set.y.slice(s![start..end, .., ..]);
        if pred.shape() != target.shape() {
            return Err(Error::ShapeMismatch {
                expected: pred.shape().to_vec(),
                actual: target.shape().to_vec(),
            });
        }
        for (p, t) in pred.iter().zip(target.iter()) {
            let d = p - t;
            se += d * d;
            ae += d.abs();
        }
        count += pred.len();
    }
    Ok((se / count as f64, ae / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_windows, ForecastTask};
    use ndarray::{Array2, Array3};

    fn constant_windows(n_steps: usize, value: f64) -> Windows {
        let values = Array2::from_elem((n_steps, 2), value);
        make_windows(&values, 0..n_steps, ForecastTask::new(12, 4).unwrap()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                patience: 31,
                ..TrainConfig::default()
            },
            TrainConfig {
                batch_size: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                epochs: 0,
                patience: 0,
                ..TrainConfig::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn lr_schedule_halves_from_second_epoch() {
        let c = TrainConfig::default();
        assert_eq!(c.lr_for_epoch(1), 0.005);
        assert_eq!(c.lr_for_epoch(2), 0.0025);
        assert_eq!(c.lr_for_epoch(4), 0.000625);
    }

    #[test]
    fn empty_splits_rejected() {
        let w = constant_windows(40, 1.0);
        let empty = w.select(&[]);
        let cfg = TrainConfig {
            kernel: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&empty, &w, &cfg),
            Err(Error::EmptySplit("train"))
        ));
        assert!(matches!(
            train(&w, &empty, &cfg),
            Err(Error::EmptySplit("validation"))
        ));
        let p = DLinearParams::zeros(12, 4, 3);
        assert!(evaluate(&p, &empty).is_err());
    }

    #[test]
    fn fits_a_constant() {
        let tr = constant_windows(1200, 3.0);
        let va = constant_windows(400, 3.0);
        let cfg = TrainConfig {
            kernel: 5,
            batch_size: 32,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let out = train(&tr, &va, &cfg).unwrap();
        assert!(out.best_val_mse < 1e-6, "{:?}", out.history);
        let (mse, _) = evaluate(&out.params, &va).unwrap();
        assert_eq!(mse, out.best_val_mse);
    }

    #[test]
    fn diverging_run_stops_early() {
        let values = Array2::from_shape_fn((300, 1), |(t, _)| (t as f64 * 0.3).sin());
        let task = ForecastTask::new(12, 4).unwrap();
        let tr = make_windows(&values, 0..200, task).unwrap();
        let va = make_windows(&values, 200..300, task).unwrap();
        let cfg = TrainConfig {
            kernel: 5,
            patience: 1,
            learning_rate: 1e4,
            lr_decay: 1.0,
            ..TrainConfig::default()
        };
        let out = train(&tr, &va, &cfg).unwrap();
        assert!(out.history.len() < 30, "ran {} epochs", out.history.len());
    }

    #[test]
    fn evaluate_simple_cases() {
        let p = DLinearParams::zeros(3, 2, 1);
        let w = Windows {
            x: Array3::zeros((1, 3, 2)),
            y: Array3::from_elem((1, 2, 2), 1.0),
        };
        assert_eq!(evaluate(&p, &w).unwrap(), (1.0, 1.0));
        let w = Windows {
            x: Array3::zeros((1, 3, 2)),
            y: Array3::zeros((1, 2, 2)),
        };
        assert_eq!(evaluate(&p, &w).unwrap(), (0.0, 0.0));
    }
}
