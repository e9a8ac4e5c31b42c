//! Mel filterbank and cepstral coefficients.

use super::frame::Framing;
use crate::error::{Error, Result};

pub const N_MFCC: usize = 13;
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelConfig {
    pub n_filters: usize,
    pub f_min_hz: f64,
    /// Defaults to the Nyquist frequency.
    pub f_max_hz: Option<f64>,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self { n_filters: 20, f_min_hz: 0.0, f_max_hz: None }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters spaced evenly on the mel scale, evaluated at the exact
/// centre frequency of every FFT bin.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(mel: &MelConfig, framing: &Framing) -> Result<Self> {
        let nyquist = f64::from(framing.sample_rate_hz) / 2.0;
        let f_max = mel.f_max_hz.unwrap_or(nyquist);
        if !(mel.f_min_hz >= 0.0 && mel.f_min_hz < f_max && f_max <= nyquist) {
            return Err(Error::Config(format!(
                "mel band [{}, {f_max}] Hz must satisfy 0 <= f_min < f_max <= {nyquist}",
                mel.f_min_hz
            )));
        }
        // Coefficients 1..=13 need at least 14 DCT inputs.
        if mel.n_filters <= N_MFCC {
            return Err(Error::Config(format!(
                "{} mel filters cannot yield {N_MFCC} cepstral coefficients",
                mel.n_filters
            )));
        }

        let (lo, hi) = (hz_to_mel(mel.f_min_hz), hz_to_mel(f_max));
        let step = (hi - lo) / (mel.n_filters + 1) as f64;
        let edges: Vec<f64> = (0..mel.n_filters + 2)
            .map(|i| mel_to_hz(lo + step * i as f64))
            .collect();

        let weights = edges
            .windows(3)
            .map(|e| {
                let (left, centre, right) = (e[0], e[1], e[2]);
                (0..framing.n_bins())
                    .map(|k| {
                        let f = framing.bin_hz(k);
                        if f <= left || f >= right {
                            0.0
                        } else if f <= centre {
                            (f - left) / (centre - left)
                        } else {
                            (right - f) / (right - centre)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { weights })
    }

    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Filter energies of a magnitude spectrum (squared before weighting).
    pub fn energies(&self, magnitude: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(magnitude).map(|(w, m)| w * m * m).sum())
            .collect()
    }

    /// Cepstral coefficients 1..=13 of one magnitude spectrum.
    pub fn cepstrum(&self, magnitude: &[f64]) -> [f64; N_MFCC] {
        let log_e: Vec<f64> = self
            .energies(magnitude)
            .into_iter()
            .map(|e| e.max(LOG_FLOOR).ln())
            .collect();
        dct_ii_orthonormal(&log_e)
    }
}

/// Orthonormal DCT-II coefficients 1..=13. The first input is subtracted
/// beforehand, which leaves every non-zero index unchanged and makes a
/// constant input map to exact zeros.
fn dct_ii_orthonormal(x: &[f64]) -> [f64; N_MFCC] {
    let m = x.len() as f64;
    let scale = (2.0 / m).sqrt();
    let mut out = [0.0; N_MFCC];
    for (k, c) in out.iter_mut().enumerate().map(|(i, c)| (i + 1, c)) {
        *c = scale
            * x.iter()
                .enumerate()
                .map(|(n, &v)| {
                    (v - x[0]) * (std::f64::consts::PI * k as f64 * (n as f64 + 0.5) / m).cos()
                })
                .sum::<f64>();
    }
    out
}

pub fn mfcc(spectra: &[Vec<f64>], mel: &MelConfig, framing: &Framing) -> Result<Vec<[f64; N_MFCC]>> {
    let bank = MelFilterbank::new(mel, framing)?;
    Ok(spectra.iter().map(|s| bank.cepstrum(s)).collect())
}
