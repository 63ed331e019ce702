//! Multilevel discrete wavelet transform over orthogonal Daubechies filter
//! banks.
//!
//! Each analysis stage extends the input by half-point symmetric reflection,
//! convolves with the low/high-pass decomposition filters and keeps every
//! second sample, so a length-`n` input yields two vectors of length
//! `(n + f - 1) / 2` for filter length `f`. Synthesis is the exact transpose
//! of analysis, which gives perfect reconstruction for every input length.

mod daubechies;

use crate::error::{Error, Result};

/// Largest supported Daubechies order.
pub const MAX_DAUBECHIES_ORDER: usize = 26;

/// Decomposition and reconstruction filters of an orthogonal wavelet.
///
/// Conventions: `dec_hi[k] = (-1)^k * dec_lo[f-1-k]`, and the reconstruction
/// filters are the time-reversed decomposition filters.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub name: String,
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
}

impl FilterBank {
    /// Filter bank for `dbN`, `1 <= order <= 26`.
    pub fn daubechies(order: usize) -> Result<Self> {
        if !(1..=MAX_DAUBECHIES_ORDER).contains(&order) {
            return Err(Error::UnknownWavelet(format!("db{order}")));
        }
        Ok(Self::from_scaling(
            format!("db{order}"),
            daubechies::SCALING[order - 1],
        ))
    }

    /// Builds the four filters from an orthonormal scaling filter `h`.
    fn from_scaling(name: String, h: &[f64]) -> Self {
        let rec_lo = h.to_vec();
        let dec_lo: Vec<f64> = h.iter().rev().copied().collect();
        let f = dec_lo.len();
        let dec_hi: Vec<f64> = (0..f)
            .map(|k| {
                let v = dec_lo[f - 1 - k];
                if k % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let rec_hi = dec_hi.iter().rev().copied().collect();
        Self {
            name,
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
        }
    }

    pub fn filter_len(&self) -> usize {
        self.dec_lo.len()
    }
}

/// Looks up a filter bank by identifier (`"db1"` .. `"db26"`).
pub fn filter_bank(name: &str) -> Result<FilterBank> {
    let order = name
        .strip_prefix("db")
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|n| (1..=MAX_DAUBECHIES_ORDER).contains(n))
        .ok_or_else(|| Error::UnknownWavelet(name.to_string()))?;
    FilterBank::daubechies(order)
}

/// Coefficient count produced by one analysis stage.
pub fn stage_len(signal_len: usize, filter_len: usize) -> usize {
    (signal_len + filter_len - 1) / 2
}

/// Deepest level at which every stage still spans at least one full filter:
/// `floor(log2(signal_len / (filter_len - 1)))`, or 0 when the signal is
/// shorter than that.
pub fn max_level(signal_len: usize, filter_len: usize) -> usize {
    if filter_len < 2 {
        return 0;
    }
    let base = filter_len - 1;
    let mut level = 0;
    while base
        .checked_shl(level as u32 + 1)
        .is_some_and(|v| v <= signal_len)
    {
        level += 1;
    }
    level
}

/// Highest level `wavedec` accepts for this signal. A single stage is always
/// admissible (it is boundary-dominated for short signals but still exactly
/// invertible).
pub fn admissible_level(signal_len: usize, filter_len: usize) -> usize {
    max_level(signal_len, filter_len).max(1)
}

/// Half-point symmetric extension: `x[-1-k] = x[k]`, `x[n+k] = x[n-1-k]`,
/// repeated periodically for reflections wider than the signal.
#[inline]
fn reflect(t: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = t.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

/// One analysis stage: returns `(approx, detail)`.
pub fn dwt_step(signal: &[f64], fb: &FilterBank) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::SignalTooShort { len: n, min: 2 });
    }
    let f = fb.filter_len();
    let m = stage_len(n, f);
    let mut approx = vec![0.0; m];
    let mut detail = vec![0.0; m];
    for i in 0..m {
        let pos = 2 * i + 1;
        let (mut a, mut d) = (0.0, 0.0);
        if pos >= f - 1 && pos < n {
            // interior: no reflection needed
            for j in 0..f {
                let x = signal[pos - j];
                a += fb.dec_lo[j] * x;
                d += fb.dec_hi[j] * x;
            }
        } else {
            for j in 0..f {
                let x = signal[reflect(pos as isize - j as isize, n)];
                a += fb.dec_lo[j] * x;
                d += fb.dec_hi[j] * x;
            }
        }
        approx[i] = a;
        detail[i] = d;
    }
    Ok((approx, detail))
}

/// One synthesis stage: upsample, filter with the reconstruction pair, sum
/// and keep `out_len` samples.
pub fn idwt_step(
    approx: &[f64],
    detail: &[f64],
    fb: &FilterBank,
    out_len: usize,
) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::CoefficientMismatch(format!(
            "approximation has {} coefficients, detail has {}",
            approx.len(),
            detail.len()
        )));
    }
    let m = approx.len();
    let f = fb.filter_len();
    // forward length formula maps n -> (n + f - 1) / 2, so n is one of these two
    let feasible = out_len >= 1 && (out_len + f - 1) / 2 == m;
    if !feasible {
        return Err(Error::InfeasibleLength {
            out_len,
            coeff_len: m,
            filter_len: f,
        });
    }
    let mut out = vec![0.0; out_len];
    for (t, slot) in out.iter_mut().enumerate() {
        // coefficient i contributes through tap k = t + f - 2 - 2i
        let i_lo = t.saturating_sub(1).div_ceil(2);
        let i_hi = ((t + f - 2) / 2).min(m - 1);
        let mut acc = 0.0;
        for i in i_lo..=i_hi {
            let k = t + f - 2 - 2 * i;
            acc += approx[i] * fb.rec_lo[k] + detail[i] * fb.rec_hi[k];
        }
        *slot = acc;
    }
    Ok(out)
}

/// Multilevel coefficients of one signal.
///
/// Bands are addressed approx-first: band 0 is the last-level approximation,
/// band 1 the coarsest detail, band `level` the finest detail.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub approx: Vec<f64>,
    /// Detail vectors, coarsest level first.
    pub details: Vec<Vec<f64>>,
    pub original_len: usize,
}

impl WaveletCoeffs {
    pub fn level(&self) -> usize {
        self.details.len()
    }

    pub fn num_bands(&self) -> usize {
        self.details.len() + 1
    }

    pub fn band(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.approx
        } else {
            &self.details[i - 1]
        }
    }

    pub fn band_mut(&mut self, i: usize) -> &mut Vec<f64> {
        if i == 0 {
            &mut self.approx
        } else {
            &mut self.details[i - 1]
        }
    }

    pub fn bands(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.approx.as_slice()).chain(self.details.iter().map(Vec::as_slice))
    }

    pub fn bands_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        std::iter::once(&mut self.approx).chain(self.details.iter_mut())
    }

    /// Every coefficient multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for band in out.bands_mut() {
            band.iter_mut().for_each(|v| *v *= alpha);
        }
        out
    }
}

/// Multilevel decomposition, recursing on the approximation.
pub fn wavedec(signal: &[f64], fb: &FilterBank, level: usize) -> Result<WaveletCoeffs> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::SignalTooShort { len: n, min: 2 });
    }
    let max = admissible_level(n, fb.filter_len());
    if level > max {
        return Err(Error::LevelTooHigh {
            requested: level,
            max,
            len: n,
        });
    }
    wavedec_unchecked(signal, fb, level)
}

/// [`wavedec`] without the level bound. Stages past [`max_level`] are
/// dominated by boundary extension (coefficient vectors stop shrinking) but
/// remain exactly invertible by [`waverec`].
pub fn wavedec_unchecked(signal: &[f64], fb: &FilterBank, level: usize) -> Result<WaveletCoeffs> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::SignalTooShort { len: n, min: 2 });
    }
    if level == 0 {
        return Err(Error::ZeroLevel);
    }
    let mut details = Vec::with_capacity(level);
    let mut approx = signal.to_vec();
    for _ in 0..level {
        let (a, d) = dwt_step(&approx, fb)?;
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(WaveletCoeffs {
        approx,
        details,
        original_len: n,
    })
}

/// Multilevel reconstruction; inverse of [`wavedec`].
pub fn waverec(coeffs: &WaveletCoeffs, fb: &FilterBank) -> Result<Vec<f64>> {
    if coeffs.details.is_empty() {
        return Err(Error::CoefficientMismatch("no detail levels".into()));
    }
    let mut approx = coeffs.approx.clone();
    for (j, detail) in coeffs.details.iter().enumerate() {
        let out_len = match coeffs.details.get(j + 1) {
            Some(finer) => finer.len(),
            None => coeffs.original_len,
        };
        approx = idwt_step(&approx, detail, fb, out_len)
            .map_err(|e| e.context(format!("reconstructing level {}", coeffs.level() - j)))?;
    }
    Ok(approx)
}
