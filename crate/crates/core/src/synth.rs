//! Synthetic swallow-like recordings and feature-space fixtures.
//!
//! Normal swallows are low-pass noise bursts under a smooth envelope.
//! Dysphagic swallows use a steeper spectral tilt (a lower body cutoff) and
//! add tonal click transients spread over 600 to 1900 Hz. Tilt and click
//! density both scale with `separation`; at zero separation the two classes
//! share one distribution.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_annotations, write_wav, AudioSegment, AudioSignal, Consistency, Label, SegmentAnnotation};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::features::FrameConfig;
use crate::rng::{derived_rng, stream, Rng};

pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const WAV_DIR: &str = "wav";

const HEALTHY_SUBJECTS: usize = 14;
const PATIENT_SUBJECTS: usize = 18;
const CONSISTENCIES: [Consistency; 3] = [Consistency::Thin, Consistency::MildlyThick, Consistency::Porridge];

// Generator constants. Amplitudes are relative to the unit-RMS low-pass body.
const BODY_CUTOFF_HZ: (f64, f64) = (250.0, 450.0);
const BURST_FRACTION: (f64, f64) = (0.5, 0.8);
const BODY_RMS: (f64, f64) = (0.065, 0.2);
const NOISE_FLOOR: (f64, f64) = (1e-3, 1e-2);
/// Dysphagic body cutoff is scaled by this factor raised to `separation`.
const CUTOFF_SHRINK: f64 = 0.65;
const CLICKS_PER_SECOND: f64 = 10.0;
const CLICK_AMPLITUDE: (f64, f64) = (2.0, 4.0);
const CLICK_HZ: (f64, f64) = (600.0, 1900.0);
const CLICK_DECAY_S: (f64, f64) = (0.01, 0.025);
const PEAK_LIMIT: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_normal: usize,
    pub n_dysphagic: usize,
    pub sample_rate_hz: u32,
    pub segment_duration_s: f64,
    /// Class contrast; 0 makes the classes indistinguishable.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_normal: 152,
            n_dysphagic: 110,
            sample_rate_hz: 4000,
            segment_duration_s: 1.0,
            separation: 1.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::Config(format!("separation must be finite and >= 0, got {}", self.separation)));
        }
        if self.sample_rate_hz < 1000 {
            return Err(Error::Config(format!("sample rate {} Hz is too low", self.sample_rate_hz)));
        }
        let frame = FrameConfig::default().resolve(self.sample_rate_hz)?;
        let n = self.samples_per_segment();
        if !self.segment_duration_s.is_finite() || n < frame.frame_len {
            return Err(Error::Config(format!(
                "segment duration {} s is shorter than one analysis frame",
                self.segment_duration_s
            )));
        }
        Ok(())
    }

    pub fn samples_per_segment(&self) -> usize {
        (self.segment_duration_s * f64::from(self.sample_rate_hz)).round().max(0.0) as usize
    }

    pub fn len(&self) -> usize {
        self.n_normal + self.n_dysphagic
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, index: usize) -> Label {
        if index < self.n_normal { Label::Normal } else { Label::Dysphagic }
    }
}

/// Name of the `index`-th recording, without extension.
pub fn recording_name(index: usize) -> String {
    format!("swallow_{:04}", index + 1)
}

fn annotation(config: &SynthConfig, index: usize) -> Result<SegmentAnnotation> {
    let label = config.label(index);
    let (within, subject) = match label {
        Label::Normal => (index, format!("H{:02}", index % HEALTHY_SUBJECTS + 1)),
        Label::Dysphagic => {
            let k = index - config.n_normal;
            (k, format!("P{:02}", k % PATIENT_SUBJECTS + 1))
        }
    };
    let duration = config.samples_per_segment() as f64 / f64::from(config.sample_rate_hz);
    Ok(SegmentAnnotation::new(0.0, duration, label, CONSISTENCIES[within % CONSISTENCIES.len()], subject)?
        .with_wav(format!("{WAV_DIR}/{}.wav", recording_name(index))))
}

/// Second-order low-pass section (RBJ cookbook, Q = 1/sqrt 2).
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
}

impl Biquad {
    fn low_pass(cutoff_hz: f64, rate_hz: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / rate_hz;
        let alpha = w0.sin() / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        Self {
            b: [(1.0 - cos) / 2.0 / a0, (1.0 - cos) / a0, (1.0 - cos) / 2.0 / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x[0] + self.b[2] * self.x[1]
            - self.a[0] * self.y[0]
            - self.a[1] * self.y[1];
        self.x = [x, self.x[0]];
        self.y = [y, self.y[0]];
        y
    }
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..hi)
}

fn log_uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    (uniform(rng, (lo.ln(), hi.ln()))).exp()
}

fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Fourth-order low-pass noise with unit RMS.
fn low_pass_noise(rng: &mut Rng, n: usize, cutoff_hz: f64, rate_hz: f64) -> Vec<f64> {
    let warmup = 256;
    let mut f1 = Biquad::low_pass(cutoff_hz, rate_hz);
    let mut f2 = Biquad::low_pass(cutoff_hz, rate_hz);
    let mut out: Vec<f64> = (0..n + warmup)
        .map(|_| f2.step(f1.step(gaussian(rng))))
        .skip(warmup)
        .collect();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v /= rms);
    }
    out
}

/// Synthesizes one recording. Randomness comes only from `rng`.
fn synthesize_one(rng: &mut Rng, label: Label, n: usize, rate_hz: f64, separation: f64) -> Vec<f64> {
    let burst_len = ((uniform(rng, BURST_FRACTION) * n as f64) as usize).clamp(2, n);
    let burst_start = rng.random_range(0..=n - burst_len);
    let envelope: Vec<f64> = (0..n)
        .map(|i| match i.checked_sub(burst_start) {
            Some(k) if k < burst_len => (PI * (k as f64 + 0.5) / burst_len as f64).sin().powi(2),
            _ => 0.0,
        })
        .collect();

    let mut cutoff = uniform(rng, BODY_CUTOFF_HZ);
    if label == Label::Dysphagic {
        cutoff *= CUTOFF_SHRINK.powf(separation);
    }
    let body = low_pass_noise(rng, n, cutoff, rate_hz);
    let mut x: Vec<f64> = body.iter().zip(&envelope).map(|(b, e)| b * e).collect();

    if label == Label::Dysphagic && separation > 0.0 {
        let expected = separation * CLICKS_PER_SECOND * burst_len as f64 / rate_hz;
        let clicks = Poisson::new(expected).map_or(0, |p| p.sample(rng) as usize);
        for _ in 0..clicks {
            let at = burst_start + rng.random_range(0..burst_len);
            let amp = separation * uniform(rng, CLICK_AMPLITUDE);
            let freq = uniform(rng, CLICK_HZ);
            let decay = uniform(rng, CLICK_DECAY_S);
            let phase = uniform(rng, (0.0, 2.0 * PI));
            let len = ((5.0 * decay * rate_hz) as usize).min(n - at);
            for k in 0..len {
                let t = k as f64 / rate_hz;
                x[at + k] += amp * (-t / decay).exp() * (2.0 * PI * freq * t + phase).sin();
            }
        }
    }

    let gain = uniform(rng, BODY_RMS);
    let floor = Normal::new(0.0, log_uniform(rng, NOISE_FLOOR)).expect("valid normal");
    for v in x.iter_mut() {
        *v = gain * *v + floor.sample(rng);
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > PEAK_LIMIT {
        x.iter_mut().for_each(|v| *v *= PEAK_LIMIT / peak);
    }
    x
}

/// All recordings of a corpus, in annotation order. Each recording uses its
/// own derived generator, so the output does not depend on scheduling.
pub fn synthesize_segments(config: &SynthConfig) -> Result<Vec<AudioSegment>> {
    config.validate()?;
    let n = config.samples_per_segment();
    let rate = config.sample_rate_hz;
    (0..config.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(config.seed, stream::SYNTH, i as u64);
            let samples = synthesize_one(&mut rng, config.label(i), n, f64::from(rate), config.separation);
            Ok(AudioSegment { annotation: annotation(config, i)?, samples, sample_rate_hz: rate })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub annotations: PathBuf,
    pub wavs: Vec<PathBuf>,
}

/// Writes `wav/swallow_NNNN.wav` (16-bit PCM) for every recording and an
/// `annotations.csv` whose `wav` column references them.
pub fn generate_synthetic_corpus(config: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<SynthCorpus> {
    let out_dir = out_dir.as_ref();
    let segments = synthesize_segments(config)?;
    let wav_dir = out_dir.join(WAV_DIR);
    fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let wavs = segments
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let path = wav_dir.join(format!("{}.wav", recording_name(i)));
            write_wav(&path, &AudioSignal::new(s.samples.clone(), s.sample_rate_hz)?)?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;
    let annotations = out_dir.join(ANNOTATIONS_FILE);
    let rows: Vec<SegmentAnnotation> = segments.into_iter().map(|s| s.annotation).collect();
    write_annotations(&annotations, &rows)?;
    Ok(SynthCorpus { annotations, wavs })
}

/// Unit-variance Gaussian features; the dysphagic mean is offset by `shift`.
/// Rows are ordered normal first, then dysphagic.
pub fn generate_feature_clusters(n_per_class: usize, shift: &[f64], seed: u64) -> Result<LabeledDataset> {
    if n_per_class < 2 {
        return Err(Error::Config(format!("need at least 2 rows per class, got {n_per_class}")));
    }
    if shift.is_empty() {
        return Err(Error::Dimension("shift vector is empty".into()));
    }
    let mut rng = derived_rng(seed, stream::CLUSTERS, 0);
    let mut features = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for label in Label::ALL {
        for _ in 0..n_per_class {
            let offset = |j: usize| if label == Label::Dysphagic { shift[j] } else { 0.0 };
            features.push((0..shift.len()).map(|j| gaussian(&mut rng) + offset(j)).collect());
            labels.push(label);
        }
    }
    let ids = (1..=labels.len()).map(|i| format!("c{i:04}")).collect();
    LabeledDataset::new(features, labels, ids)
}
