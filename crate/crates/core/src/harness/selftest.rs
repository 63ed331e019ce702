//! Fast invariant checks runnable from the command line.

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{
    create_random_mask, freq_mask, freq_mix, wave_mask, wave_mix, AugmentationPolicy, ConcatWindow,
    Method,
};
use crate::dwt::{admissible_level, filter_bank, wavedec, waverec};
use crate::error::Result;
use crate::model::{dlinear_backward, DLinearParams};
use crate::spectral::{irfft, rfft};
use crate::SeriesTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult {
            name,
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_window(rng: &mut ChaCha8Rng, len: usize, k: usize, lookback: usize) -> ConcatWindow {
    let v = Array2::from_shape_fn((len, k), |_| rng.gen_range(-1.0..1.0));
    ConcatWindow::from_values(v, lookback)
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn reconstruction() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for name in ["db1", "db2", "db5", "db26"] {
        let fb = filter_bank(name)?;
        for len in [48, 360] {
            for level in 1..=admissible_level(len, fb.filter_len()).min(3) {
                let x = random_vec(&mut rng, len);
                let rec = waverec(&wavedec(&x, &fb, level)?, &fb)?;
                let err = x
                    .iter()
                    .zip(&rec)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(err);
            }
        }
    }
    Ok((worst < 1e-8, format!("max error {worst:.3e}")))
}

fn rate_limits() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let policy = |m: Method, r: f64| AugmentationPolicy::wavelet(m, "db2", 2, vec![r; 3], 1.0);
    for _ in 0..10 {
        let s1 = random_window(&mut rng, 48, 2, 32);
        let s2 = random_window(&mut rng, 48, 2, 32);
        let zero = Array2::zeros(s1.values.raw_dim());
        let cases = [
            (
                wave_mask(&s1, &policy(Method::WaveMask, 0.0)?, &mut rng)?,
                &s1.values,
            ),
            (
                wave_mask(&s1, &policy(Method::WaveMask, 1.0)?, &mut rng)?,
                &zero,
            ),
            (
                wave_mix(&s1, &s2, &policy(Method::WaveMix, 0.0)?, &mut rng)?,
                &s1.values,
            ),
            (
                wave_mix(&s1, &s2, &policy(Method::WaveMix, 1.0)?, &mut rng)?,
                &s2.values,
            ),
            (freq_mask(&s1, 0.0, &mut rng)?, &s1.values),
            (freq_mix(&s1, &s2, 0.0, &mut rng)?, &s1.values),
        ];
        for (got, want) in &cases {
            worst = worst.max(max_abs_diff(&got.values, want));
        }
    }
    Ok((worst < 1e-8, format!("max deviation {worst:.3e}")))
}

fn fft_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for n in 1..=32 {
        let x = random_vec(&mut rng, n);
        let spec = rfft(&x)?;
        for (k, bin) in spec.bins.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = TAU * (k * t) as f64 / n as f64;
                re += v * a.cos();
                im -= v * a.sin();
            }
            worst = worst.max((bin.re - re).abs()).max((bin.im - im).abs());
        }
        let back = irfft(&spec)?;
        let rt = x
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(rt);
    }
    Ok((worst < 1e-8, format!("max deviation {worst:.3e}")))
}

fn gradient_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (l, h, k) = (8, 4, 2);
    let params = DLinearParams::init(l, h, 3, &mut rng);
    let x = SeriesTensor::from_shape_fn((3, l, k), |_| rng.gen_range(-1.0..1.0));
    let y = SeriesTensor::from_shape_fn((3, h, k), |_| rng.gen_range(-1.0..1.0));
    let (_, grads) = dlinear_backward(&params, &x, &y)?;
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for (s, g) in grads.slices().iter().enumerate() {
        for i in 0..g.len() {
            let mut plus = params.clone();
            plus.slices_mut()[s][i] += eps;
            let mut minus = params.clone();
            minus.slices_mut()[s][i] -= eps;
            let fd = (dlinear_backward(&plus, &x, &y)?.0 - dlinear_backward(&minus, &x, &y)?.0)
                / (2.0 * eps);
            let rel = (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    Ok((worst < 1e-5, format!("max relative error {worst:.3e}")))
}

fn mask_statistics() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut parts = Vec::new();
    let mut ok = true;
    for r in [0.1, 0.5, 0.9] {
        let frac = create_random_mask(100_000, r, &mut rng)?.count_masked() as f64 / 100_000.0;
        ok &= (frac - r).abs() <= 0.01;
        parts.push(format!("{r}: {frac:.4}"));
    }
    Ok((ok, parts.join(", ")))
}

/// Runs every check; each result carries a one-line detail.
pub fn run_selftest() -> Vec<CheckResult> {
    vec![
        check("perfect reconstruction", reconstruction),
        check("augmentation rate limits", rate_limits),
        check("rfft vs direct DFT", fft_oracle),
        check("DLinear gradients vs finite differences", gradient_oracle),
        check("mask statistics", mask_statistics),
    ]
}
