use super::DLinearParams;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: DLinearParams,
    pub v: DLinearParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &DLinearParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    params: &mut DLinearParams,
    grads: &DLinearParams,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    let lens = |p: &DLinearParams| p.slices().map(<[f64]>::len);
    if lens(params) != lens(grads)
        || lens(params) != lens(&state.m)
        || lens(params) != lens(&state.v)
    {
        return Err(Error::ShapeMismatch {
            expected: params.w_trend.shape().to_vec(),
            actual: grads.w_trend.shape().to_vec(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let AdamState { m, v, .. } = state;
    for (((p, g), m), v) in params
        .slices_mut()
        .into_iter()
        .zip(grads.slices())
        .zip(m.slices_mut())
        .zip(v.slices_mut())
    {
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}
