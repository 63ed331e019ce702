//! Wavelet and Fourier domain augmentations applied to concatenated
//! look-back/horizon windows, plus the batch-level sampling that appends a
//! subset of augmented rows to each training batch.
//!
//! All randomness comes from an explicit RNG. Inside a batch, row `i` draws
//! from its own ChaCha stream keyed by the row index, so results do not
//! depend on evaluation order and rows may be processed in parallel.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dwt::{self, FilterBank};
use crate::error::{Error, Result};
use crate::spectral;
use crate::SeriesTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    WaveMask,
    WaveMix,
    FreqMask,
    FreqMix,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::None,
        Method::WaveMask,
        Method::WaveMix,
        Method::FreqMask,
        Method::FreqMix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::WaveMask => "wave_mask",
            Method::WaveMix => "wave_mix",
            Method::FreqMask => "freq_mask",
            Method::FreqMix => "freq_mix",
        }
    }

    pub fn is_wavelet(self) -> bool {
        matches!(self, Method::WaveMask | Method::WaveMix)
    }

    pub fn is_fourier(self) -> bool {
        matches!(self, Method::FreqMask | Method::FreqMix)
    }

    pub fn is_mixing(self) -> bool {
        matches!(self, Method::WaveMix | Method::FreqMix)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidPolicy(format!("unknown method `{s}`")))
    }
}

/// Method selector plus its hyperparameters.
///
/// For wavelet methods `rates` has `level + 1` entries, approx band first.
/// For Fourier methods `rates` holds the single per-bin rate and `wavelet`
/// and `level` are unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub method: Method,
    pub wavelet: String,
    pub level: usize,
    pub rates: Vec<f64>,
    pub sampling_rate: f64,
}

impl AugmentationPolicy {
    pub fn none() -> Self {
        Self {
            method: Method::None,
            wavelet: String::new(),
            level: 0,
            rates: Vec::new(),
            sampling_rate: 0.0,
        }
    }

    pub fn wavelet(
        method: Method,
        wavelet: &str,
        level: usize,
        rates: Vec<f64>,
        sampling_rate: f64,
    ) -> Result<Self> {
        if !method.is_wavelet() {
            return Err(Error::InvalidPolicy(format!(
                "{method} is not a wavelet method"
            )));
        }
        let p = Self {
            method,
            wavelet: wavelet.to_string(),
            level,
            rates,
            sampling_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn fourier(method: Method, rate: f64, sampling_rate: f64) -> Result<Self> {
        if !method.is_fourier() {
            return Err(Error::InvalidPolicy(format!(
                "{method} is not a Fourier method"
            )));
        }
        let p = Self {
            method,
            wavelet: String::new(),
            level: 0,
            rates: vec![rate],
            sampling_rate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_rate("sampling_rate", self.sampling_rate)?;
        for &r in &self.rates {
            check_rate("rate", r)?;
        }
        match self.method {
            Method::None => {}
            Method::WaveMask | Method::WaveMix => {
                if self.level == 0 {
                    return Err(Error::InvalidPolicy("level must be at least 1".into()));
                }
                if self.rates.len() != self.level + 1 {
                    return Err(Error::InvalidPolicy(format!(
                        "{} rates given for level {} (need {})",
                        self.rates.len(),
                        self.level,
                        self.level + 1
                    )));
                }
                dwt::filter_bank(&self.wavelet)?;
            }
            Method::FreqMask | Method::FreqMix => {
                if self.rates.len() != 1 {
                    return Err(Error::InvalidPolicy(format!(
                        "{} takes a single rate, got {}",
                        self.method,
                        self.rates.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Single rate of a Fourier policy.
    pub fn rate(&self) -> f64 {
        self.rates.first().copied().unwrap_or(0.0)
    }
}

fn check_rate(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::RateOutOfRange { what, value })
    }
}

/// Boolean mask over a coefficient vector; `true` marks a masked entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVector {
    pub bits: Vec<bool>,
}

impl MaskVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_masked(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> MaskVector {
        MaskVector {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// Independent Bernoulli(`rate`) bit per entry; consumes exactly `len`
/// uniform draws.
pub fn create_random_mask<R: Rng + ?Sized>(
    len: usize,
    rate: f64,
    rng: &mut R,
) -> Result<MaskVector> {
    check_rate("mask rate", rate)?;
    let bits = (0..len).map(|_| rng.gen::<f64>() < rate).collect();
    Ok(MaskVector { bits })
}

/// Look-back and horizon of one sample joined along time: shape
/// `(lookback + horizon, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatWindow {
    pub values: Array2<f64>,
    pub lookback: usize,
}

impl ConcatWindow {
    pub fn concat<'a>(x: ArrayView2<'a, f64>, y: ArrayView2<'a, f64>) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::ShapeMismatch {
                expected: vec![y.nrows(), x.ncols()],
                actual: y.shape().to_vec(),
            });
        }
        let values = concatenate(Axis(0), &[x, y]).expect("column counts checked");
        Ok(Self {
            values,
            lookback: x.nrows(),
        })
    }

    pub fn from_values(values: Array2<f64>, lookback: usize) -> Self {
        assert!(lookback <= values.nrows());
        Self { values, lookback }
    }

    pub fn horizon(&self) -> usize {
        self.values.nrows() - self.lookback
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn split(&self) -> (ArrayView2<'_, f64>, ArrayView2<'_, f64>) {
        let (x, y) = self.values.view().split_at(Axis(0), self.lookback);
        (x, y)
    }

    fn same_shape(&self, other: &ConcatWindow) -> Result<()> {
        if self.values.shape() != other.values.shape() || self.lookback != other.lookback {
            return Err(Error::ShapeMismatch {
                expected: self.values.shape().to_vec(),
                actual: other.values.shape().to_vec(),
            });
        }
        Ok(())
    }
}

fn wavelet_setup(policy: &AugmentationPolicy, expect: Method, len: usize) -> Result<FilterBank> {
    if policy.method != expect {
        return Err(Error::InvalidPolicy(format!(
            "expected a {expect} policy, got {}",
            policy.method
        )));
    }
    policy.validate()?;
    let fb = dwt::filter_bank(&policy.wavelet)?;
    let max = dwt::admissible_level(len, fb.filter_len());
    if policy.level > max {
        return Err(Error::LevelTooHigh {
            requested: policy.level,
            max,
            len,
        });
    }
    Ok(fb)
}

/// Zeroes wavelet coefficients band by band (approx first) with the
/// per-band rates, independently for each channel.
pub fn wave_mask<R: Rng + ?Sized>(
    s: &ConcatWindow,
    policy: &AugmentationPolicy,
    rng: &mut R,
) -> Result<ConcatWindow> {
    let fb = wavelet_setup(policy, Method::WaveMask, s.values.nrows())?;
    let mut out = s.values.clone();
    for mut col in out.columns_mut() {
        let signal = col.to_vec();
        let mut coeffs = dwt::wavedec(&signal, &fb, policy.level)?;
        for (band, &rate) in coeffs.bands_mut().zip(&policy.rates) {
            let mask = create_random_mask(band.len(), rate, rng)?;
            for (c, masked) in band.iter_mut().zip(mask.bits) {
                if masked {
                    *c = 0.0;
                }
            }
        }
        let rec = dwt::waverec(&coeffs, &fb)?;
        col.iter_mut().zip(rec).for_each(|(o, v)| *o = v);
    }
    Ok(ConcatWindow::from_values(out, s.lookback))
}

/// Takes each coefficient from `s1` where the band mask is false and from
/// `s2` where it is true (complementary masks), then reconstructs.
pub fn wave_mix<R: Rng + ?Sized>(
    s1: &ConcatWindow,
    s2: &ConcatWindow,
    policy: &AugmentationPolicy,
    rng: &mut R,
) -> Result<ConcatWindow> {
    s1.same_shape(s2)?;
    let fb = wavelet_setup(policy, Method::WaveMix, s1.values.nrows())?;
    let mut out = s1.values.clone();
    for (mut col, other) in out.columns_mut().into_iter().zip(s2.values.columns()) {
        let mut w1 = dwt::wavedec(&col.to_vec(), &fb, policy.level)?;
        let w2 = dwt::wavedec(&other.to_vec(), &fb, policy.level)?;
        for (i, &rate) in policy.rates.iter().enumerate() {
            let band1 = w1.band_mut(i);
            let band2 = w2.band(i);
            let m1 = create_random_mask(band1.len(), rate, rng)?;
            for ((c1, &c2), take_second) in band1.iter_mut().zip(band2).zip(m1.bits) {
                if take_second {
                    *c1 = c2;
                }
            }
        }
        let rec = dwt::waverec(&w1, &fb)?;
        col.iter_mut().zip(rec).for_each(|(o, v)| *o = v);
    }
    Ok(ConcatWindow::from_values(out, s1.lookback))
}

fn freq_mask_channel(signal: &[f64], mask: &MaskVector) -> Result<Vec<f64>> {
    let mut spec = spectral::rfft(signal)?;
    for (bin, &masked) in spec.bins.iter_mut().zip(&mask.bits) {
        if masked {
            *bin = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    spectral::irfft(&spec)
}

fn freq_mix_channel(a: &[f64], b: &[f64], mask: &MaskVector) -> Result<Vec<f64>> {
    let mut spec = spectral::rfft(a)?;
    let other = spectral::rfft(b)?;
    for ((bin, o), &take) in spec.bins.iter_mut().zip(&other.bins).zip(&mask.bits) {
        if take {
            *bin = *o;
        }
    }
    spectral::irfft(&spec)
}

/// Zeroes each real-FFT bin independently with probability `rate`.
pub fn freq_mask<R: Rng + ?Sized>(
    s: &ConcatWindow,
    rate: f64,
    rng: &mut R,
) -> Result<ConcatWindow> {
    check_rate("rate", rate)?;
    let mut out = s.values.clone();
    let bins = spectral::Spectrum::num_bins(s.values.nrows());
    for mut col in out.columns_mut() {
        let mask = create_random_mask(bins, rate, rng)?;
        let rec = freq_mask_channel(&col.to_vec(), &mask)?;
        col.iter_mut().zip(rec).for_each(|(o, v)| *o = v);
    }
    Ok(ConcatWindow::from_values(out, s.lookback))
}

/// Replaces each real-FFT bin of `s1` by the corresponding bin of `s2` with
/// probability `rate`.
pub fn freq_mix<R: Rng + ?Sized>(
    s1: &ConcatWindow,
    s2: &ConcatWindow,
    rate: f64,
    rng: &mut R,
) -> Result<ConcatWindow> {
    s1.same_shape(s2)?;
    check_rate("rate", rate)?;
    let mut out = s1.values.clone();
    let bins = spectral::Spectrum::num_bins(s1.values.nrows());
    for (mut col, other) in out.columns_mut().into_iter().zip(s2.values.columns()) {
        let mask = create_random_mask(bins, rate, rng)?;
        let rec = freq_mix_channel(&col.to_vec(), &other.to_vec(), &mask)?;
        col.iter_mut().zip(rec).for_each(|(o, v)| *o = v);
    }
    Ok(ConcatWindow::from_values(out, s1.lookback))
}

/// Applies the policy's method to one window; `partner` is used only by the
/// mixing methods.
pub fn augment_window<R: Rng + ?Sized>(
    s: &ConcatWindow,
    partner: &ConcatWindow,
    policy: &AugmentationPolicy,
    rng: &mut R,
) -> Result<ConcatWindow> {
    match policy.method {
        Method::None => Ok(s.clone()),
        Method::WaveMask => wave_mask(s, policy, rng),
        Method::WaveMix => wave_mix(s, partner, policy, rng),
        Method::FreqMask => freq_mask(s, policy.rate(), rng),
        Method::FreqMix => freq_mix(s, partner, policy.rate(), rng),
    }
}

/// Number of rows kept from a batch of `b`: `max(1, round(rate * b))`
/// for a positive rate, capped at `b`.
pub fn sample_count(b: usize, sampling_rate: f64) -> usize {
    if sampling_rate <= 0.0 || b == 0 {
        return 0;
    }
    ((sampling_rate * b as f64).round() as usize).clamp(1, b)
}

/// Row indices chosen by [`sample_rows`], in output order.
pub fn sample_indices<R: Rng + ?Sized>(b: usize, sampling_rate: f64, rng: &mut R) -> Vec<usize> {
    index::sample(rng, b, sample_count(b, sampling_rate)).into_vec()
}

/// Uniformly samples rows without replacement.
pub fn sample_rows<R: Rng + ?Sized>(
    aug: &SeriesTensor,
    sampling_rate: f64,
    rng: &mut R,
) -> SeriesTensor {
    let idx = sample_indices(aug.len_of(Axis(0)), sampling_rate, rng);
    aug.select(Axis(0), &idx)
}

fn row_rng(batch_seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
    rng.set_stream(row as u64);
    rng
}

/// Augments a training batch and appends the sampled synthetic rows after
/// the originals: returns `(b + n)` rows.
///
/// Mixing methods pair row `i` with row `perm[i]` of a fresh random
/// permutation of the batch. Only the `n` sampled rows are transformed; since
/// each row has its own keyed RNG stream this is identical to augmenting
/// the full batch and then sampling.
pub fn augment_training_batch<R: Rng + ?Sized>(
    x: &SeriesTensor,
    y: &SeriesTensor,
    policy: &AugmentationPolicy,
    rng: &mut R,
) -> Result<(SeriesTensor, SeriesTensor)> {
    let (b, lookback, k) = x.dim();
    let (by, horizon, ky) = y.dim();
    if b != by || k != ky {
        return Err(Error::ShapeMismatch {
            expected: vec![b, horizon, k],
            actual: vec![by, horizon, ky],
        });
    }
    if policy.method == Method::None || b == 0 {
        return Ok((x.clone(), y.clone()));
    }
    policy.validate()?;

    let batch_seed: u64 = rng.gen();
    let mut perm: Vec<usize> = (0..b).collect();
    if policy.method.is_mixing() {
        perm.shuffle(rng);
    }
    let chosen = sample_indices(b, policy.sampling_rate, rng);

    let window = |i: usize| {
        ConcatWindow::concat(x.slice(s![i, .., ..]), y.slice(s![i, .., ..]))
            .expect("shapes checked")
    };
    let augmented: Vec<ConcatWindow> = chosen
        .par_iter()
        .map(|&i| {
            let mut r = row_rng(batch_seed, i);
            augment_window(&window(i), &window(perm[i]), policy, &mut r)
        })
        .collect::<Result<_>>()?;

    let n = augmented.len();
    let mut x_out = SeriesTensor::zeros((b + n, lookback, k));
    let mut y_out = SeriesTensor::zeros((b + n, horizon, k));
    x_out.slice_mut(s![..b, .., ..]).assign(x);
    y_out.slice_mut(s![..b, .., ..]).assign(y);
    for (j, w) in augmented.iter().enumerate() {
        let (xa, ya) = w.split();
        x_out.slice_mut(s![b + j, .., ..]).assign(&xa);
        y_out.slice_mut(s![b + j, .., ..]).assign(&ya);
    }
    Ok((x_out, y_out))
}
