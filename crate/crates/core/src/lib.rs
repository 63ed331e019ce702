//! Wavelet-domain augmentation for time-series forecasting.
//!
//! The crate provides a multilevel Daubechies DWT ([`dwt`]), a real FFT used
//! by the Fourier baselines ([`spectral`]), the WaveMask/WaveMix and
//! FreqMask/FreqMix augmentations ([`augment`]), a DLinear forecaster with
//! manual gradients and Adam ([`model`]), dataset handling ([`data`]) and the
//! experiment harness behind the `wavaug` CLI ([`harness`]).

pub mod augment;
pub mod data;
pub mod dwt;
mod error;
pub mod harness;
pub mod model;
pub mod spectral;

pub use augment::{AugmentationPolicy, ConcatWindow, MaskVector, Method};
pub use data::{Dataset, ForecastTask, Normalizer, Windows};
pub use dwt::{FilterBank, WaveletCoeffs};
pub use error::{Error, Result};
pub use harness::{Aggregate, ExperimentSpec, ResultRecord};
pub use model::{DLinearParams, TrainConfig};
pub use spectral::Spectrum;

/// `(rows, time, channels)` block of values; windows and batches use it.
pub type SeriesTensor = ndarray::Array3<f64>;
