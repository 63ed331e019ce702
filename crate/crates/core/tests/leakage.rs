use ndarray::{s, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use wavaug::augment::{augment_training_batch, AugmentationPolicy, Method};
use wavaug::data::{
    fit_apply_normalizer, make_windows, split_622, synthetic_seasonal, Dataset, ForecastTask,
};

fn hash3(a: &Array3<f64>) -> Vec<u8> {
    let mut h = Sha256::new();
    for v in a.iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().to_vec()
}

/// Normalizer statistics and the first augmented training batch hash for
/// `ds`, under every augmentation method.
fn fingerprint(ds: &Dataset) -> (Vec<u8>, Vec<Vec<u8>>) {
    let task = ForecastTask::new(96, 48).unwrap();
    let splits = split_622(ds.timesteps(), task.lookback).unwrap();
    let (normed, stats) = fit_apply_normalizer(ds, splits.train.clone()).unwrap();
    let stats_bytes: Vec<u8> = stats
        .mean
        .iter()
        .chain(&stats.std)
        .flat_map(|v| v.to_le_bytes())
        .collect();

    let w = make_windows(&normed.values, splits.train.clone(), task).unwrap();
    let x = w.x.slice(s![..32, .., ..]).to_owned();
    let y = w.y.slice(s![..32, .., ..]).to_owned();
    let policies = [
        AugmentationPolicy::wavelet(Method::WaveMask, "db3", 2, vec![0.2, 0.5, 0.8], 0.5).unwrap(),
        AugmentationPolicy::wavelet(Method::WaveMix, "db25", 1, vec![0.1, 0.9], 1.0).unwrap(),
        AugmentationPolicy::fourier(Method::FreqMask, 0.3, 1.0).unwrap(),
        AugmentationPolicy::fourier(Method::FreqMix, 0.6, 0.5).unwrap(),
    ];
    let hashes = policies
        .iter()
        .map(|p| {
            let (xa, ya) =
                augment_training_batch(&x, &y, p, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
            [hash3(&xa), hash3(&ya)].concat()
        })
        .collect();
    (stats_bytes, hashes)
}

#[test]
fn test_split_does_not_reach_training() {
    let ds = synthetic_seasonal(2000, 3, 5);
    let splits = split_622(ds.timesteps(), 96).unwrap();
    let mut perturbed = ds.clone();
    perturbed
        .values
        .slice_mut(s![splits.test.start.., ..])
        .mapv_inplace(|v| v * 40.0 + 1e3);
    assert_ne!(perturbed.values, ds.values);
    assert_eq!(fingerprint(&perturbed), fingerprint(&ds));
}

#[test]
fn validation_split_does_not_reach_statistics() {
    let ds = synthetic_seasonal(2000, 2, 9);
    let splits = split_622(ds.timesteps(), 96).unwrap();
    let mut perturbed = ds.clone();
    perturbed
        .values
        .slice_mut(s![splits.train.end.., ..])
        .mapv_inplace(|v| -v);
    assert_eq!(fingerprint(&perturbed).0, fingerprint(&ds).0);
}
