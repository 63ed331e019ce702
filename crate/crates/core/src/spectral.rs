//! Real-input DFT used by the frequency-domain augmentation baselines.
//!
//! Forward is unnormalized; the inverse divides by `n`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Non-negative-frequency half of the spectrum of a real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `n / 2 + 1` bins.
    pub bins: Vec<Complex64>,
    pub original_len: usize,
}

impl Spectrum {
    pub fn num_bins(len: usize) -> usize {
        len / 2 + 1
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn rfft(signal: &[f64]) -> Result<Spectrum> {
    let n = signal.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    buf.truncate(Spectrum::num_bins(n));
    // the DC (and Nyquist) bins of a real signal are real
    buf[0].im = 0.0;
    if n.is_multiple_of(2) {
        buf[n / 2].im = 0.0;
    }
    Ok(Spectrum {
        bins: buf,
        original_len: n,
    })
}

pub fn irfft(spec: &Spectrum) -> Result<Vec<f64>> {
    let n = spec.original_len;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let expected = Spectrum::num_bins(n);
    if spec.bins.len() != expected {
        return Err(Error::SpectrumLength {
            bins: spec.bins.len(),
            len: n,
            expected,
        });
    }
    let mut full = Vec::with_capacity(n);
    full.extend_from_slice(&spec.bins);
    full[0].im = 0.0;
    if n.is_multiple_of(2) {
        full[n / 2].im = 0.0;
    }
    full.truncate(n);
    for k in full.len()..n {
        full.push(spec.bins[n - k].conj());
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut full));
    let scale = 1.0 / n as f64;
    Ok(full.into_iter().map(|c| c.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dc_signal() {
        let s = rfft(&[1.0; 4]).unwrap();
        assert_eq!(s.bins.len(), 3);
        for (got, want) in s.bins.iter().zip([c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) {
            assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-12);
            assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-12);
        }
        let back = irfft(&Spectrum {
            bins: vec![c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            original_len: 4,
        })
        .unwrap();
        assert_abs_diff_eq!(back.as_slice(), [1.0; 4].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn alternating_cosine() {
        let s = rfft(&[1.0, 0.0, -1.0, 0.0]).unwrap();
        let want = [0.0, 2.0, 0.0];
        for (got, w) in s.bins.iter().zip(want) {
            assert_abs_diff_eq!(got.re, w, epsilon = 1e-12);
            assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn odd_length_round_trip() {
        let x = [0.3, -1.2, 4.0, 2.5, -0.7, 0.0, 9.1];
        let s = rfft(&x).unwrap();
        assert_eq!(s.bins.len(), 4);
        let y = irfft(&s).unwrap();
        assert_abs_diff_eq!(x.as_slice(), y.as_slice(), epsilon = 1e-10);
    }

    #[test]
    fn zero_spectrum() {
        let y = irfft(&Spectrum {
            bins: vec![c(0.0, 0.0); 6],
            original_len: 11,
        })
        .unwrap();
        assert_eq!(y, vec![0.0; 11]);
    }

    #[test]
    fn errors() {
        assert!(matches!(rfft(&[]), Err(Error::EmptyInput)));
        assert!(matches!(
            irfft(&Spectrum {
                bins: vec![c(1.0, 0.0); 3],
                original_len: 8
            }),
            Err(Error::SpectrumLength { expected: 5, .. })
        ));
    }

    #[test]
    fn single_sample() {
        let s = rfft(&[2.5]).unwrap();
        assert_eq!(s.bins, vec![c(2.5, 0.0)]);
        assert_eq!(irfft(&s).unwrap(), vec![2.5]);
    }
}
