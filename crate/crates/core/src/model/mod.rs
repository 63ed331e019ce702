//! DLinear: moving-average trend/residual split followed by one linear head
//! per component, shared across channels.

mod checkpoint;
mod optim;
mod train;

pub use optim::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use train::{evaluate, train, EpochStats, TrainConfig, TrainOutcome};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::SeriesTensor;

/// Moving-average width used when none is configured.
pub const DEFAULT_KERNEL: usize = 25;

/// Parameters of both linear heads. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct DLinearParams {
    /// `horizon x lookback`
    pub w_trend: Array2<f64>,
    pub b_trend: Array1<f64>,
    /// `horizon x lookback`
    pub w_resid: Array2<f64>,
    pub b_resid: Array1<f64>,
    pub kernel: usize,
}

impl DLinearParams {
    pub fn zeros(lookback: usize, horizon: usize, kernel: usize) -> Self {
        Self {
            w_trend: Array2::zeros((horizon, lookback)),
            b_trend: Array1::zeros(horizon),
            w_resid: Array2::zeros((horizon, lookback)),
            b_resid: Array1::zeros(horizon),
            kernel,
        }
    }

    /// Uniform(-1/sqrt(lookback), 1/sqrt(lookback)) for every weight and bias.
    pub fn init<R: Rng + ?Sized>(
        lookback: usize,
        horizon: usize,
        kernel: usize,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (lookback as f64).sqrt();
        let mut p = Self::zeros(lookback, horizon, kernel);
        for slice in p.slices_mut() {
            slice
                .iter_mut()
                .for_each(|v| *v = rng.gen_range(-bound..bound));
        }
        p
    }

    pub fn lookback(&self) -> usize {
        self.w_trend.ncols()
    }

    pub fn horizon(&self) -> usize {
        self.w_trend.nrows()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.lookback(), self.horizon(), self.kernel)
    }

    pub fn slices(&self) -> [&[f64]; 4] {
        [
            self.w_trend.as_slice().expect("standard layout"),
            self.b_trend.as_slice().expect("standard layout"),
            self.w_resid.as_slice().expect("standard layout"),
            self.b_resid.as_slice().expect("standard layout"),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w_trend.as_slice_mut().expect("standard layout"),
            self.b_trend.as_slice_mut().expect("standard layout"),
            self.w_resid.as_slice_mut().expect("standard layout"),
            self.b_resid.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

fn check_kernel(kernel: usize, lookback: usize) -> Result<()> {
    let max = 2 * lookback;
    if kernel.is_multiple_of(2) || kernel == 0 || kernel > max {
        return Err(Error::InvalidKernel { kernel, max });
    }
    Ok(())
}

/// `(b, t, k)` -> `(b * k, t)`, one row per (sample, channel).
fn to_rows(x: &SeriesTensor) -> Array2<f64> {
    let (b, t, k) = x.dim();
    x.view()
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((b * k, t))
        .expect("contiguous")
}

/// Inverse of [`to_rows`].
fn from_rows(rows: Array2<f64>, b: usize, k: usize) -> SeriesTensor {
    let t = rows.ncols();
    rows.into_shape_with_order((b, k, t))
        .expect("row count is b * k")
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned()
}

/// Centered moving average along each row with edge replication.
fn moving_average_rows(rows: ArrayView2<f64>, kernel: usize) -> Array2<f64> {
    let half = kernel / 2;
    let t = rows.ncols();
    let mut out = Array2::zeros(rows.raw_dim());
    let scale = 1.0 / kernel as f64;
    for (src, mut dst) in rows.outer_iter().zip(out.outer_iter_mut()) {
        let at = |i: isize| src[i.clamp(0, t as isize - 1) as usize];
        let mut acc: f64 = (-(half as isize)..=half as isize).map(at).sum();
        dst[0] = acc * scale;
        for i in 1..t as isize {
            acc += at(i + half as isize) - at(i - 1 - half as isize);
            dst[i as usize] = acc * scale;
        }
    }
    out
}

fn decompose_rows(rows: &Array2<f64>, kernel: usize) -> (Array2<f64>, Array2<f64>) {
    let trend = moving_average_rows(rows.view(), kernel);
    let resid = rows - &trend;
    (trend, resid)
}

/// Splits `x` (b, t, k) into a moving-average trend and the residual.
pub fn series_decompose(x: &SeriesTensor, kernel: usize) -> Result<(SeriesTensor, SeriesTensor)> {
    let (b, t, k) = x.dim();
    check_kernel(kernel, t)?;
    let (trend, resid) = decompose_rows(&to_rows(x), kernel);
    Ok((from_rows(trend, b, k), from_rows(resid, b, k)))
}

fn check_input(params: &DLinearParams, x: &SeriesTensor) -> Result<()> {
    let (b, t, k) = x.dim();
    if t != params.lookback() {
        return Err(Error::ShapeMismatch {
            expected: vec![b, params.lookback(), k],
            actual: x.shape().to_vec(),
        });
    }
    check_kernel(params.kernel, t)
}

fn forward_rows(params: &DLinearParams, trend: &Array2<f64>, resid: &Array2<f64>) -> Array2<f64> {
    let mut pred = trend.dot(&params.w_trend.t()) + resid.dot(&params.w_resid.t());
    let bias = &params.b_trend + &params.b_resid;
    pred += &bias;
    pred
}

/// Forecast `(b, horizon, k)` for look-back windows `(b, lookback, k)`.
pub fn dlinear_forward(params: &DLinearParams, x: &SeriesTensor) -> Result<SeriesTensor> {
    check_input(params, x)?;
    let (b, _, k) = x.dim();
    let (trend, resid) = decompose_rows(&to_rows(x), params.kernel);
    Ok(from_rows(forward_rows(params, &trend, &resid), b, k))
}

fn check_same_shape(pred: &SeriesTensor, target: &SeriesTensor) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            expected: pred.shape().to_vec(),
            actual: target.shape().to_vec(),
        });
    }
    Ok(())
}

/// Mean squared error over every (row, time, channel) entry.
pub fn mse_loss(pred: &SeriesTensor, target: &SeriesTensor) -> Result<f64> {
    check_same_shape(pred, target)?;
    let n = pred.len().max(1) as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Mean absolute error over every (row, time, channel) entry.
pub fn mae_loss(pred: &SeriesTensor, target: &SeriesTensor) -> Result<f64> {
    check_same_shape(pred, target)?;
    let n = pred.len().max(1) as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n)
}

/// MSE loss of the forecast and its exact gradient with respect to every
/// parameter.
pub fn dlinear_backward(
    params: &DLinearParams,
    x: &SeriesTensor,
    target: &SeriesTensor,
) -> Result<(f64, DLinearParams)> {
    check_input(params, x)?;
    let (b, _, k) = x.dim();
    if target.dim() != (b, params.horizon(), k) {
        return Err(Error::ShapeMismatch {
            expected: vec![b, params.horizon(), k],
            actual: target.shape().to_vec(),
        });
    }
    let (trend, resid) = decompose_rows(&to_rows(x), params.kernel);
    let pred = forward_rows(params, &trend, &resid);
    let diff = pred - to_rows(target);
    let n = diff.len().max(1) as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;

    // dL/dpred = 2 (pred - target) / n
    let g = diff * (2.0 / n);
    let gt = g.t();
    let bias_grad = g.sum_axis(Axis(0));
    let grads = DLinearParams {
        w_trend: gt.dot(&trend),
        b_trend: bias_grad.clone(),
        w_resid: gt.dot(&resid),
        b_resid: bias_grad,
        kernel: params.kernel,
    };
    Ok((loss, grads))
}
