//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{s, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use wavaug::augment::{
    augment_training_batch, create_random_mask, freq_mask, freq_mix, wave_mask, wave_mix,
    AugmentationPolicy, ConcatWindow, Method,
};
use wavaug::data::{
    fit_apply_normalizer, make_windows, split_622, synthetic_seasonal, Dataset, ForecastTask,
};
use wavaug::dwt::{admissible_level, filter_bank, wavedec_unchecked, waverec};
use wavaug::harness::{
    aggregate, emit_report, load_dataset, mean_std, parse_config, parse_config_str, prepare,
    run_experiment, run_single, DataSource, ExperimentSpec, PreparedData, ReportFormat,
};
use wavaug::model::{dlinear_backward, mse_loss, DLinearParams};
use wavaug::spectral::{irfft, rfft};

type Check = fn() -> Outcome;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

const WAVELETS: [&str; 6] = ["db1", "db2", "db3", "db5", "db25", "db26"];

fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn reconstruction() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut count = 0;
    for name in WAVELETS {
        let fb = filter_bank(name).unwrap();
        for level in 1..=4 {
            for n in [48, 360, 1056] {
                for _ in 0..50 {
                    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
                    let y = waverec(&wavedec_unchecked(&x, &fb, level).unwrap(), &fb).unwrap();
                    let err = x
                        .iter()
                        .zip(&y)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    worst = worst.max(err);
                    count += 1;
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        worst < 1e-8 && secs < 10.0,
        format!("max error {worst:.2e} over {count} signals in {secs:.2} s (limits 1e-8, 10 s)"),
    )
}

fn rate_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut configs = 0;
    let (lookback, horizon, k) = (336, 96, 3);
    let random_window = |rng: &mut ChaCha8Rng| {
        ConcatWindow::from_values(
            Array2::from_shape_fn((lookback + horizon, k), |_| rng.gen_range(-5.0..5.0)),
            lookback,
        )
    };
    for name in WAVELETS {
        for level in
            1..=admissible_level(lookback + horizon, filter_bank(name).unwrap().filter_len()).min(4)
        {
            configs += 1;
            let with = |method, r: f64| {
                AugmentationPolicy::wavelet(method, name, level, vec![r; level + 1], 1.0).unwrap()
            };
            for _ in 0..100 {
                let s1 = random_window(&mut rng);
                let s2 = random_window(&mut rng);
                let zeros = Array2::zeros(s1.values.dim());
                let checks = [
                    (
                        wave_mask(&s1, &with(Method::WaveMask, 0.0), &mut rng).unwrap(),
                        &s1.values,
                    ),
                    (
                        wave_mask(&s1, &with(Method::WaveMask, 1.0), &mut rng).unwrap(),
                        &zeros,
                    ),
                    (
                        wave_mix(&s1, &s2, &with(Method::WaveMix, 0.0), &mut rng).unwrap(),
                        &s1.values,
                    ),
                    (
                        wave_mix(&s1, &s2, &with(Method::WaveMix, 1.0), &mut rng).unwrap(),
                        &s2.values,
                    ),
                ];
                for (got, want) in checks {
                    worst = worst.max(max_abs(&got.values, want));
                }
            }
        }
    }
    configs += 1;
    for _ in 0..100 {
        let s1 = random_window(&mut rng);
        let s2 = random_window(&mut rng);
        worst = worst.max(max_abs(
            &freq_mask(&s1, 0.0, &mut rng).unwrap().values,
            &s1.values,
        ));
        worst = worst.max(max_abs(
            &freq_mix(&s1, &s2, 0.0, &mut rng).unwrap().values,
            &s1.values,
        ));
    }
    verdict(
        worst < 1e-8,
        format!(
            "max deviation {worst:.2e} over {configs} configurations x 100 windows (limit 1e-8)"
        ),
    )
}

/// Forward pass with explicit loops and an explicitly padded moving average.
fn naive_forward(p: &DLinearParams, x: &Array3<f64>) -> Array3<f64> {
    let (b, l, k) = x.dim();
    let h = p.horizon();
    let half = p.kernel / 2;
    let mut out = Array3::zeros((b, h, k));
    for s in 0..b {
        for c in 0..k {
            let mut padded = vec![x[[s, 0, c]]; half];
            padded.extend((0..l).map(|t| x[[s, t, c]]));
            padded.extend(vec![x[[s, l - 1, c]]; half]);
            let trend: Vec<f64> = (0..l)
                .map(|t| padded[t..t + p.kernel].iter().sum::<f64>() / p.kernel as f64)
                .collect();
            for o in 0..h {
                let mut v = p.b_trend[o] + p.b_resid[o];
                for t in 0..l {
                    v += p.w_trend[[o, t]] * trend[t]
                        + p.w_resid[[o, t]] * (x[[s, t, c]] - trend[t]);
                }
                out[[s, o, c]] = v;
            }
        }
    }
    out
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let step = 1e-5;
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let kernel = [1, 3, 5, 7][trial % 4];
        let mut p = DLinearParams::init(8, 4, kernel, &mut rng);
        p.b_trend.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        p.b_resid.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        let b = 1 + trial % 3;
        let x = Array3::from_shape_fn((b, 8, 2), |_| rng.gen_range(-2.0..2.0));
        let y = Array3::from_shape_fn((b, 4, 2), |_| rng.gen_range(-2.0..2.0));
        let (_, grads) = dlinear_backward(&p, &x, &y).unwrap();
        let loss = |q: &DLinearParams| mse_loss(&naive_forward(q, &x), &y).unwrap();
        let (mut num, mut den_a, mut den_n) = (0.0, 0.0, 0.0);
        for s in 0..4 {
            for i in 0..grads.slices()[s].len() {
                let mut plus = p.clone();
                plus.slices_mut()[s][i] += step;
                let mut minus = p.clone();
                minus.slices_mut()[s][i] -= step;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
                let g = grads.slices()[s][i];
                num += (g - fd) * (g - fd);
                den_a += g * g;
                den_n += fd * fd;
            }
        }
        worst = worst.max(num.sqrt() / den_a.sqrt().max(den_n.sqrt()));
    }
    verdict(
        worst < 1e-5,
        format!("worst relative error {worst:.2e} over 100 instances (limit 1e-5)"),
    )
}

fn fft() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut dft_err = 0.0f64;
    for n in 1..=64usize {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let spec = rfft(&x).unwrap();
        for (k, b) in spec.bins.iter().enumerate() {
            let (re, im) = x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let a = TAU * ((k * t) % n) as f64 / n as f64;
                (re + v * a.cos(), im - v * a.sin())
            });
            dft_err = dft_err.max((b.re - re).abs()).max((b.im - im).abs());
        }
    }
    let mut trip_err = 0.0f64;
    for n in 1..=1056usize {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let y = irfft(&rfft(&x).unwrap()).unwrap();
        trip_err = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(trip_err, f64::max);
    }
    verdict(
        dft_err < 1e-8 && trip_err < 1e-10,
        format!("DFT error {dft_err:.2e} for n <= 64 (limit 1e-8), roundtrip error {trip_err:.2e} for n <= 1056 (limit 1e-10)"),
    )
}

fn mask_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [0.1, 0.5, 0.9] {
        let m = create_random_mask(100_000, r, &mut rng).unwrap();
        let frac = m.count_masked() as f64 / m.len() as f64;
        ok &= (frac - r).abs() <= 0.01;
        parts.push(format!("r={r}: {frac:.4}"));
    }
    verdict(ok, format!("{} (tolerance 0.01)", parts.join(", ")))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

/// ETTh1 config with the data directory and a scratch output directory
/// applied; `None` when the CSV cannot be found.
fn etth1_spec(out: &Path) -> Option<ExperimentSpec> {
    let mut spec = parse_config(config_path("etth1_tuned.toml")).unwrap();
    spec.apply_overrides(
        Some(out.to_path_buf()),
        std::env::var_os("WAVAUG_DATA_DIR").map(PathBuf::from),
    );
    match &spec.dataset.source {
        DataSource::Csv(p) if p.is_file() => Some(spec),
        _ => None,
    }
}

/// Test MSEs for every seed of `spec`, per method, at one horizon and keep
/// fraction.
fn sweep(
    spec: &ExperimentSpec,
    data: &PreparedData,
    fraction: f64,
    horizon: usize,
) -> BTreeMap<Method, Vec<f64>> {
    let jobs: Vec<(Method, u64)> = spec
        .methods
        .iter()
        .flat_map(|&m| spec.seeds().map(move |s| (m, s)))
        .collect();
    let results: Vec<(Method, f64)> = jobs
        .par_iter()
        .map(|&(m, s)| {
            (
                m,
                run_single(spec, data, fraction, horizon, m, s).unwrap().mse,
            )
        })
        .collect();
    let mut out: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for (m, mse) in results {
        out.entry(m).or_default().push(mse);
    }
    out
}

fn summary(by_method: &BTreeMap<Method, Vec<f64>>) -> (BTreeMap<Method, f64>, String) {
    let mut means = BTreeMap::new();
    let mut parts = Vec::new();
    for (m, v) in by_method {
        let (mean, std) = mean_std(v).unwrap();
        means.insert(*m, mean);
        parts.push(format!("{m} {mean:.4}±{std:.4}"));
    }
    (means, parts.join(", "))
}

fn reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let Some(mut spec) = etth1_spec(dir.path()) else {
        return Outcome::Skip("ETTh1.csv not found (set WAVAUG_DATA_DIR)".into());
    };
    spec.methods = vec![Method::None, Method::WaveMix];
    let data = prepare(&spec, &load_dataset(&spec).unwrap()).unwrap();
    let (means, text) = summary(&sweep(&spec, &data, 1.0, 96));
    let within = |got: f64, want: f64| (got - want).abs() <= 0.1 * want;
    verdict(
        within(means[&Method::None], 0.3708) && within(means[&Method::WaveMix], 0.3696),
        format!("{text} (targets 0.3708 and 0.3696, ±10%)"),
    )
}

fn coldstart_direction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (spec, canonical) = match etth1_spec(dir.path()) {
        Some(spec) => (spec, true),
        None => {
            let mut spec = parse_config(config_path("etth1_tuned.toml")).unwrap();
            spec.dataset.name = "synthetic_seasonal".into();
            spec.dataset.source =
                DataSource::Synthetic(wavaug::harness::SyntheticSource::Seasonal {
                    timesteps: 6000,
                    channels: 3,
                    seed: 0,
                });
            spec.methods = vec![Method::None, Method::WaveMask, Method::WaveMix];
            spec.out_dir = dir.path().to_path_buf();
            (spec, false)
        }
    };
    let data = prepare(&spec, &load_dataset(&spec).unwrap()).unwrap();
    let (means, text) = summary(&sweep(&spec, &data, 0.15, 96));
    let wave = means[&Method::WaveMask].min(means[&Method::WaveMix]);
    let (rival, label) = if canonical {
        (
            means[&Method::FreqMask].min(means[&Method::FreqMix]),
            "best freq",
        )
    } else {
        (means[&Method::None], "none")
    };
    verdict(
        wave <= rival,
        format!(
            "{} at 15%: best wave {wave:.4} vs {label} {rival:.4}; {text}",
            if canonical {
                "ETTh1"
            } else {
                "synthetic seasonal"
            }
        ),
    )
}

fn determinism() -> Outcome {
    let text = r#"
methods = ["none", "wave_mask", "freq_mix"]
n_repeats = 2
downsample = [0.5]
[dataset]
name = "det"
synthetic = { kind = "seasonal", timesteps = 800, channels = 2, seed = 4 }
[task]
lookback = 48
horizons = [24]
[train]
epochs = 4
patience = 2
batch_size = 16
[[policy]]
method = "wave_mask"
wavelet = "db3"
level = 2
rates = [0.2, 0.4, 0.6]
sampling_rate = 0.5
[[policy]]
method = "freq_mix"
rate = 0.3
"#;
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = parse_config_str(text, dir.path()).unwrap();
        spec.out_dir = dir.path().to_path_buf();
        let recs = run_experiment(&spec).unwrap();
        let mut files =
            emit_report(&aggregate(&recs).unwrap(), dir.path(), ReportFormat::Csv).unwrap();
        files.push(spec.ledger_path());
        let contents: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(p).unwrap(),
                )
            })
            .collect();
        runs.push(contents);
    }
    verdict(
        runs[0] == runs[1],
        format!("{} files compared byte for byte", runs[0].len()),
    )
}

fn batch_hashes(ds: &Dataset) -> (Vec<u64>, Vec<u8>) {
    let task = ForecastTask::new(96, 48).unwrap();
    let splits = split_622(ds.timesteps(), task.lookback).unwrap();
    let (normed, stats) = fit_apply_normalizer(ds, splits.train.clone()).unwrap();
    let bits = stats
        .mean
        .iter()
        .chain(&stats.std)
        .map(|v| v.to_bits())
        .collect();
    let w = make_windows(&normed.values, splits.train.clone(), task).unwrap();
    let x = w.x.slice(s![..32, .., ..]).to_owned();
    let y = w.y.slice(s![..32, .., ..]).to_owned();
    let mut h = Sha256::new();
    for p in [
        AugmentationPolicy::wavelet(Method::WaveMask, "db2", 3, vec![0.5, 0.3, 0.9, 0.9], 0.2)
            .unwrap(),
        AugmentationPolicy::wavelet(Method::WaveMix, "db3", 1, vec![0.0, 0.9], 0.2).unwrap(),
        AugmentationPolicy::fourier(Method::FreqMask, 0.1, 1.0).unwrap(),
        AugmentationPolicy::fourier(Method::FreqMix, 0.2, 1.0).unwrap(),
    ] {
        let (xa, ya) =
            augment_training_batch(&x, &y, &p, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for v in xa.iter().chain(ya.iter()) {
            h.update(v.to_le_bytes());
        }
    }
    (bits, h.finalize().to_vec())
}

fn leakage() -> Outcome {
    let ds = synthetic_seasonal(3000, 4, 6);
    let test_start = split_622(ds.timesteps(), 96).unwrap().test.start;
    let mut perturbed = ds.clone();
    perturbed
        .values
        .slice_mut(s![test_start.., ..])
        .mapv_inplace(|v| 25.0 * v - 300.0);
    let (a_stats, a_hash) = batch_hashes(&ds);
    let (b_stats, b_hash) = batch_hashes(&perturbed);
    verdict(
        a_stats == b_stats && a_hash == b_hash,
        format!(
            "normalizer statistics identical: {}, batch hash identical: {}",
            a_stats == b_stats,
            a_hash == b_hash
        ),
    )
}

fn main() {
    // `cargo test -- --list` and friends
    if std::env::args().skip(1).any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, Check); 9] = [
        ("perfect reconstruction", reconstruction),
        ("rate-limit identities", rate_limits),
        ("gradient oracle", gradients),
        ("fft oracle", fft),
        ("mask statistics", mask_statistics),
        ("ETTh1 horizon 96 reproduction", reproduction),
        ("cold-start direction", coldstart_direction),
        ("determinism", determinism),
        ("leakage guards", leakage),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let line = match check() {
            Outcome::Pass(d) => format!("PASS criterion {} {name}: {d}", i + 1),
            Outcome::Skip(d) => format!("SKIP criterion {} {name}: {d}", i + 1),
            Outcome::Fail(d) => {
                failed += 1;
                format!("FAIL criterion {} {name}: {d}", i + 1)
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
