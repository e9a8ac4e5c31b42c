use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::frame::{Framing, Window};

/// Windowed one-sided magnitude spectra for a fixed framing. Holds the FFT
/// plan and window so repeated frames reuse them.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window_kind: Window,
    window: Vec<f64>,
    fft_size: usize,
}

impl SpectrumAnalyzer {
    pub fn new(framing: &Framing) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(framing.fft_size);
        Self {
            fft,
            window_kind: framing.window,
            window: framing.window.coefficients(framing.frame_len),
            fft_size: framing.fft_size,
        }
    }

    /// Magnitude of the one-sided DFT of the windowed frame, zero padded to
    /// the FFT size. Frames of a length other than the configured one get a
    /// window of their own length.
    pub fn magnitude(&self, frame: &[f64]) -> Vec<f64> {
        assert!(frame.len() <= self.fft_size, "frame longer than FFT size");
        let resized;
        let window = if frame.len() == self.window.len() {
            &self.window
        } else {
            resized = self.window_kind.coefficients(frame.len());
            &resized
        };
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(window) {
            b.re = x * w;
        }
        self.fft.process(&mut buf);
        buf[..self.fft_size / 2 + 1].iter().map(|c| c.norm()).collect()
    }
}

pub fn power_spectrum(frame: &[f64], framing: &Framing) -> Vec<f64> {
    SpectrumAnalyzer::new(framing).magnitude(frame)
}
