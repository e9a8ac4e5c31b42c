//! Feature extraction checked against a direct, unoptimized reimplementation
//! and against its scaling and ordering invariants.

use std::f64::consts::PI;

use auscult_core::features::{extract_all, index, power_spectrum, FeatureExtractor, Framing};
use auscult_core::{
    AudioSegment, Consistency, Execution, FrameConfig, Label, MelConfig, SegmentAnnotation, Window,
    FEATURE_COUNT,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const RATE: u32 = 4000;

fn segment(samples: Vec<f64>) -> AudioSegment {
    AudioSegment {
        annotation: SegmentAnnotation::new(0.0, samples.len() as f64 / f64::from(RATE), Label::Normal, Consistency::Thin, "S")
            .unwrap(),
        samples,
        sample_rate_hz: RATE,
    }
}

fn hamming(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect()
}

fn naive_dft_magnitude(x: &[f64], window: &[f64], n_fft: usize) -> Vec<f64> {
    (0..=n_fft / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, (&v, &w)) in x.iter().zip(window).enumerate() {
                let ang = -2.0 * PI * ((k * t) % n_fft) as f64 / n_fft as f64;
                re += v * w * ang.cos();
                im += v * w * ang.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Band-limited noise with a slow envelope, so every filter keeps energy.
fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let white: Vec<f64> = (0..n + 2).map(|_| StandardNormal.sample(rng)).collect();
    (0..n)
        .map(|t| {
            let env = 0.3 + 0.7 * (PI * t as f64 / n as f64).sin();
            0.2 * env * (white[t] + 0.5 * white[t + 1] - 0.3 * white[t + 2])
        })
        .collect()
}

#[test]
fn fft_matches_naive_dft_on_1000_random_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len: usize = rng.random_range(2..=256);
        let window = if rng.random_bool(0.5) { Window::Hamming } else { Window::Rectangular };
        let extra = rng.random_range(0..=1);
        let n_fft = len.next_power_of_two() << extra;
        let framing = Framing::new(len, 1, Some(n_fft), window, RATE).unwrap();
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = match window {
            Window::Hamming => hamming(len),
            Window::Rectangular => vec![1.0; len],
        };
        let fast = power_spectrum(&x, &framing);
        let slow = naive_dft_magnitude(&x, &w, n_fft);
        assert_eq!(fast.len(), slow.len());
        worst = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    assert!(worst < 1e-9, "largest deviation {worst}");
}

/// All 25 per-frame values, written straight from the definitions.
fn oracle_frame(raw: &[f64], prev_p: Option<&[f64]>) -> ([f64; FEATURE_COUNT], Vec<f64>) {
    let n_fft = 128;
    let mag = naive_dft_magnitude(raw, &hamming(raw.len()), n_fft);
    let bins = mag.len();
    let freq = |k: usize| k as f64 * f64::from(RATE) / n_fft as f64;
    let mut v = [0.0; FEATURE_COUNT];

    // Mel filterbank over 0..2000 Hz, 20 filters, then DCT-II indices 1..=13.
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let inv = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let edges: Vec<f64> = (0..22).map(|i| inv(mel(2000.0) * i as f64 / 21.0)).collect();
    let log_e: Vec<f64> = (0..20)
        .map(|j| {
            let (l, c, r) = (edges[j], edges[j + 1], edges[j + 2]);
            let e: f64 = (0..bins)
                .map(|k| {
                    let f = freq(k);
                    let w = if f > l && f <= c {
                        (f - l) / (c - l)
                    } else if f > c && f < r {
                        (r - f) / (r - c)
                    } else {
                        0.0
                    };
                    w * mag[k] * mag[k]
                })
                .sum();
            e.max(1e-10).ln()
        })
        .collect();
    for k in 1..=13 {
        v[k - 1] = (2.0f64 / 20.0).sqrt()
            * (0..20).map(|n| log_e[n] * (PI * k as f64 * (n as f64 + 0.5) / 20.0).cos()).sum::<f64>();
    }

    let total: f64 = mag.iter().sum();
    let p: Vec<f64> = mag.iter().map(|m| m / total).collect();
    let centroid: f64 = (0..bins).map(|k| p[k] * freq(k)).sum();
    let central = |o: i32| (0..bins).map(|k| p[k] * (freq(k) - centroid).powi(o)).sum::<f64>();
    let spread = central(2).sqrt();
    let mean = total / bins as f64;
    let geo = ((0..bins).map(|k| mag[k].max(1e-10).ln()).sum::<f64>() / bins as f64).exp();
    let energy_total: f64 = mag.iter().map(|m| m * m).sum();
    let rolloff = (0..bins)
        .find(|&m| mag[..=m].iter().map(|x| x * x).sum::<f64>() >= 0.9 * energy_total)
        .map(freq)
        .unwrap();
    v[index::CENTROID] = centroid;
    v[index::CREST] = mag.iter().copied().fold(0.0, f64::max) / mean;
    v[index::ENTROPY] = -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.log2()).sum::<f64>() / (bins as f64).log2();
    v[index::FLATNESS] = (geo / mean).min(1.0);
    v[index::FLUX] = prev_p.map_or(0.0, |q| p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum());
    v[index::KURTOSIS] = central(4) / spread.powi(4);
    v[index::ROLLOFF] = rolloff;
    v[index::SKEWNESS] = central(3) / spread.powi(3);
    v[index::SPREAD] = spread;

    let n = raw.len();
    v[index::HARMONIC_RATIO] = (4..=66)
        .map(|lag| {
            let r: f64 = (0..n - lag).map(|t| raw[t] * raw[t + lag]).sum();
            let head: f64 = raw[..n - lag].iter().map(|x| x * x).sum();
            let tail: f64 = raw[lag..].iter().map(|x| x * x).sum();
            r / (head * tail).sqrt()
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0);
    let crossings = (1..n).filter(|&t| (raw[t - 1] >= 0.0) != (raw[t] >= 0.0)).count();
    v[index::ZCR] = crossings as f64 / (n - 1) as f64;
    v[index::ENERGY] = raw.iter().map(|x| x * x).sum::<f64>() / n as f64;
    (v, p)
}

#[test]
fn two_frame_segment_is_the_mean_of_hand_computed_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        // 100-sample frames with a 40-sample hop: exactly two frames.
        let samples = noise(&mut rng, 140);
        let (f1, p1) = oracle_frame(&samples[..100], None);
        let (f2, _) = oracle_frame(&samples[40..140], Some(&p1));
        let got = FeatureExtractor::new(&FrameConfig::default(), &MelConfig::default(), RATE)
            .unwrap()
            .extract(&segment(samples))
            .unwrap();
        for j in 0..FEATURE_COUNT {
            let want = (f1[j] + f2[j]) / 2.0;
            let tol = 1e-9 * want.abs().max(1.0);
            assert!((got.get(j) - want).abs() <= tol, "feature {j}: {} vs {want}", got.get(j));
        }
    }
}

const SCALE_INVARIANT: [usize; 11] = [
    index::CENTROID,
    index::CREST,
    index::ENTROPY,
    index::FLATNESS,
    index::FLUX,
    index::KURTOSIS,
    index::ROLLOFF,
    index::SKEWNESS,
    index::SPREAD,
    index::HARMONIC_RATIO,
    index::ZCR,
];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn amplitude_scaling_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (frame, mel) = (FrameConfig::default(), MelConfig::default());
    for _ in 0..40 {
        let base = segment(noise(&mut rng, 4000));
        let c = 10f64.powf(rng.random_range(-1.0..1.0));
        let both = extract_all(&[base.clone(), base.scaled(c)], &frame, &mel, Execution::Serial).unwrap();
        let (a, b) = (&both[0], &both[1]);
        for &j in &SCALE_INVARIANT {
            assert!(close(a.get(j), b.get(j), 1e-9), "feature {j} moved under gain {c}");
        }
        assert!(close(b.get(index::ENERGY), c * c * a.get(index::ENERGY), 1e-9));
        // Filter energies sit far above the log floor for this noise, so the
        // gain only moves the excluded 0th cepstral coefficient.
        for j in 0..13 {
            assert!((a.get(j) - b.get(j)).abs() <= 1e-9, "mfcc{} moved under gain {c}", j + 1);
        }
    }
}

#[test]
fn permuting_segments_permutes_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let segments: Vec<AudioSegment> = (0..12).map(|i| segment(noise(&mut rng, 600 + 50 * i))).collect();
    let (frame, mel) = (FrameConfig::default(), MelConfig::default());
    let forward = extract_all(&segments, &frame, &mel, Execution::Parallel).unwrap();
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.reverse();
    order.swap(0, 5);
    let shuffled: Vec<AudioSegment> = order.iter().map(|&i| segments[i].clone()).collect();
    let permuted = extract_all(&shuffled, &frame, &mel, Execution::Serial).unwrap();
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(permuted[k], forward[i]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_output_is_finite(
        samples in prop::collection::vec(prop_oneof![Just(0.0), -1.0f64..1.0, -1e-300f64..1e-300], 100..600),
        zeros in any::<bool>(),
    ) {
        let samples = if zeros { vec![0.0; samples.len()] } else { samples };
        let v = FeatureExtractor::new(&FrameConfig::default(), &MelConfig::default(), RATE)
            .unwrap()
            .extract(&segment(samples))
            .unwrap();
        prop_assert!(v.is_finite(), "{:?}", v);
        prop_assert!((0.0..=1.0).contains(&v.get(index::ZCR)));
        prop_assert!((0.0..=1.0).contains(&v.get(index::HARMONIC_RATIO)));
        prop_assert!((0.0..=1.0).contains(&v.get(index::FLATNESS)));
        prop_assert!(v.get(index::CREST) >= 1.0 - 1e-12);
    }
}
