use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavaug::augment::{
    augment_training_batch, wave_mask, AugmentationPolicy, ConcatWindow, Method,
};
use wavaug::dwt::{filter_bank, wavedec, waverec};
use wavaug::spectral::{irfft, rfft};

fn signal(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dwt(c: &mut Criterion) {
    let mut g = c.benchmark_group("dwt");
    let x = signal(432);
    for (name, level) in [("db1", 3), ("db3", 3), ("db26", 1)] {
        let fb = filter_bank(name).unwrap();
        g.bench_with_input(BenchmarkId::new("wavedec", name), &x, |b, x| {
            b.iter(|| wavedec(black_box(x), &fb, level).unwrap())
        });
        let coeffs = wavedec(&x, &fb, level).unwrap();
        g.bench_with_input(BenchmarkId::new("waverec", name), &coeffs, |b, c| {
            b.iter(|| waverec(black_box(c), &fb).unwrap())
        });
    }
    g.finish();
}

fn fft(c: &mut Criterion) {
    let mut g = c.benchmark_group("rfft");
    for n in [432, 1056] {
        let x = signal(n);
        g.bench_with_input(BenchmarkId::new("roundtrip", n), &x, |b, x| {
            b.iter(|| irfft(&rfft(black_box(x)).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn augmentation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let window = ConcatWindow::from_values(
        Array2::from_shape_fn((432, 7), |_| rng.gen_range(-1.0..1.0)),
        336,
    );
    let policy =
        AugmentationPolicy::wavelet(Method::WaveMask, "db2", 3, vec![0.5, 0.3, 0.9, 0.9], 1.0)
            .unwrap();
    c.bench_function("wave_mask/window_432x7", |b| {
        b.iter(|| wave_mask(black_box(&window), &policy, &mut rng).unwrap())
    });

    let x = Array3::from_shape_fn((64, 336, 7), |_| rng.gen_range(-1.0..1.0));
    let y = Array3::from_shape_fn((64, 96, 7), |_| rng.gen_range(-1.0..1.0));
    let mut g = c.benchmark_group("batch_64x432x7");
    g.sample_size(20);
    for policy in [
        AugmentationPolicy::wavelet(Method::WaveMix, "db3", 1, vec![0.0, 0.9], 0.2).unwrap(),
        AugmentationPolicy::fourier(Method::FreqMix, 0.2, 1.0).unwrap(),
    ] {
        g.bench_function(policy.method.as_str(), |b| {
            b.iter(|| augment_training_batch(&x, &y, &policy, &mut rng).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dwt, fft, augmentation);
criterion_main!(benches);
