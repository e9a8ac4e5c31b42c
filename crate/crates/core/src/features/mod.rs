//! Frame-based acoustic features of a swallow segment.
//!
//! Each segment is cut into Hamming-windowed frames (25 ms / 10 ms hop by
//! default). Per frame we compute 13 cepstral coefficients, nine spectral
//! shape descriptors and three time-domain features; the segment's feature
//! vector is the mean of those 25 values over all frames.

mod descriptors;
mod frame;
mod mel;
mod spectrum;
mod temporal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use descriptors::{describe, spectral_descriptors, SpectralDescriptors, ROLLOFF_FRACTION};
pub use frame::{frame_signal, FrameConfig, Framing, Window};
pub use mel::{hz_to_mel, mel_to_hz, mfcc, MelConfig, MelFilterbank, LOG_FLOOR, N_MFCC};
pub use spectrum::{power_spectrum, SpectrumAnalyzer};
pub use temporal::{harmonic_ratio, pitch_lags, short_term_energy, zero_crossing_rate};

use crate::audio::AudioSegment;
use crate::error::{Error, Result};
use crate::rng::Execution;

pub const FEATURE_COUNT: usize = 25;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mfcc1", "mfcc2", "mfcc3", "mfcc4", "mfcc5", "mfcc6", "mfcc7", "mfcc8", "mfcc9", "mfcc10",
    "mfcc11", "mfcc12", "mfcc13", "centroid", "crest", "entropy", "flatness", "flux", "kurtosis",
    "rolloff", "skewness", "spread", "harmonic_ratio", "zcr", "energy",
];

/// Zero-based positions of the non-cepstral features.
pub mod index {
    pub const MFCC1: usize = 0;
    pub const MFCC5: usize = 4;
    pub const MFCC6: usize = 5;
    pub const CENTROID: usize = 13;
    pub const CREST: usize = 14;
    pub const ENTROPY: usize = 15;
    pub const FLATNESS: usize = 16;
    pub const FLUX: usize = 17;
    pub const KURTOSIS: usize = 18;
    pub const ROLLOFF: usize = 19;
    pub const SKEWNESS: usize = 20;
    pub const SPREAD: usize = 21;
    pub const HARMONIC_RATIO: usize = 22;
    pub const ZCR: usize = 23;
    pub const ENERGY: usize = 24;
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn mfcc(&self) -> &[f64] {
        &self.0[..N_MFCC]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn from_frame(cepstrum: &[f64; N_MFCC], d: &SpectralDescriptors, raw: &[f64], rate: u32) -> Self {
        let mut v = [0.0; FEATURE_COUNT];
        v[..N_MFCC].copy_from_slice(cepstrum);
        v[index::CENTROID] = d.centroid;
        v[index::CREST] = d.crest;
        v[index::ENTROPY] = d.entropy;
        v[index::FLATNESS] = d.flatness;
        v[index::FLUX] = d.flux;
        v[index::KURTOSIS] = d.kurtosis;
        v[index::ROLLOFF] = d.rolloff;
        v[index::SKEWNESS] = d.skewness;
        v[index::SPREAD] = d.spread;
        v[index::HARMONIC_RATIO] = harmonic_ratio(raw, rate);
        v[index::ZCR] = zero_crossing_rate(raw);
        v[index::ENERGY] = short_term_energy(raw);
        Self(v)
    }
}

/// Reusable extraction state for one sample rate.
pub struct FeatureExtractor {
    framing: Framing,
    analyzer: SpectrumAnalyzer,
    filterbank: MelFilterbank,
}

impl FeatureExtractor {
    pub fn new(frame: &FrameConfig, mel: &MelConfig, sample_rate_hz: u32) -> Result<Self> {
        let framing = frame.resolve(sample_rate_hz)?;
        let (_, max_lag) = pitch_lags(sample_rate_hz);
        if framing.frame_len <= max_lag {
            return Err(Error::Config(format!(
                "{}-sample frames cannot cover the {max_lag}-sample pitch lag range",
                framing.frame_len
            )));
        }
        Ok(Self {
            analyzer: SpectrumAnalyzer::new(&framing),
            filterbank: MelFilterbank::new(mel, &framing)?,
            framing,
        })
    }

    pub fn framing(&self) -> &Framing {
        &self.framing
    }

    /// Per-frame feature vectors before aggregation.
    pub fn frame_features(&self, samples: &[f64]) -> Result<Vec<FeatureVector>> {
        let frames = frame_signal(samples, &self.framing)?;
        let spectra: Vec<Vec<f64>> = frames.iter().map(|f| self.analyzer.magnitude(f)).collect();
        let descriptors = spectral_descriptors(&spectra, &self.framing);
        Ok(frames
            .iter()
            .zip(&spectra)
            .zip(&descriptors)
            .map(|((raw, mag), d)| {
                FeatureVector::from_frame(
                    &self.filterbank.cepstrum(mag),
                    d,
                    raw,
                    self.framing.sample_rate_hz,
                )
            })
            .collect())
    }

    pub fn extract(&self, segment: &AudioSegment) -> Result<FeatureVector> {
        if segment.sample_rate_hz != self.framing.sample_rate_hz {
            return Err(Error::Config(format!(
                "extractor built for {} Hz, segment is {} Hz",
                self.framing.sample_rate_hz, segment.sample_rate_hz
            )));
        }
        Ok(mean_vector(&self.frame_features(&segment.samples)?))
    }
}

/// Elementwise mean; frames are summed in order so the result does not
/// depend on how segments are scheduled.
pub fn mean_vector(frames: &[FeatureVector]) -> FeatureVector {
    let mut sum = [0.0; FEATURE_COUNT];
    for f in frames {
        for (s, v) in sum.iter_mut().zip(f.0) {
            *s += v;
        }
    }
    let n = frames.len().max(1) as f64;
    FeatureVector(sum.map(|s| s / n))
}

pub fn extract_feature_vector(
    segment: &AudioSegment,
    frame: &FrameConfig,
    mel: &MelConfig,
) -> Result<FeatureVector> {
    FeatureExtractor::new(frame, mel, segment.sample_rate_hz)?.extract(segment)
}

/// Extracts every segment, keeping input order. Segments may differ in
/// sample rate.
pub fn extract_all(
    segments: &[AudioSegment],
    frame: &FrameConfig,
    mel: &MelConfig,
    execution: Execution,
) -> Result<Vec<FeatureVector>> {
    let mut rates: Vec<u32> = segments.iter().map(|s| s.sample_rate_hz).collect();
    rates.sort_unstable();
    rates.dedup();
    let extractors = rates
        .iter()
        .map(|&r| FeatureExtractor::new(frame, mel, r).map(|e| (r, e)))
        .collect::<Result<Vec<_>>>()?;
    let run = |s: &AudioSegment| {
        let (_, ex) = extractors
            .iter()
            .find(|(r, _)| *r == s.sample_rate_hz)
            .expect("extractor for every rate");
        ex.extract(s)
    };
    match execution {
        Execution::Serial => segments.iter().map(run).collect(),
        Execution::Parallel => segments.par_iter().map(run).collect(),
    }
}
