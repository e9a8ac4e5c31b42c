use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hamming,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hamming if len == 1 => vec![1.0],
            Window::Hamming => {
                let denom = (len - 1) as f64;
                (0..len)
                    .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / denom).cos())
                    .collect()
            }
        }
    }
}

/// Analysis framing in seconds; resolved against a sample rate with
/// [`FrameConfig::resolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub frame_len_s: f64,
    pub hop_s: f64,
    /// Defaults to the smallest power of two covering one frame.
    pub fft_size: Option<usize>,
    pub window: Window,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len_s: 0.025,
            hop_s: 0.010,
            fft_size: None,
            window: Window::Hamming,
        }
    }
}

impl FrameConfig {
    pub fn resolve(&self, sample_rate_hz: u32) -> Result<Framing> {
        if !(self.frame_len_s > 0.0 && self.hop_s > 0.0 && self.hop_s <= self.frame_len_s) {
            return Err(Error::Config(format!(
                "need 0 < hop ({} s) <= frame length ({} s)",
                self.hop_s, self.frame_len_s
            )));
        }
        let rate = f64::from(sample_rate_hz);
        let frame_len = (self.frame_len_s * rate).round() as usize;
        let hop = ((self.hop_s * rate).round() as usize).max(1);
        Framing::new(frame_len, hop, self.fft_size, self.window, sample_rate_hz)
    }
}

/// Framing parameters in samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Framing {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: Window,
    pub sample_rate_hz: u32,
}

impl Framing {
    pub fn new(
        frame_len: usize,
        hop: usize,
        fft_size: Option<usize>,
        window: Window,
        sample_rate_hz: u32,
    ) -> Result<Self> {
        if frame_len < 2 || hop == 0 || hop > frame_len {
            return Err(Error::Config(format!(
                "need frame length >= 2 and 0 < hop <= frame length (got {frame_len}/{hop} samples)"
            )));
        }
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let fft_size = fft_size.unwrap_or_else(|| frame_len.next_power_of_two());
        if fft_size < frame_len {
            return Err(Error::Config(format!(
                "FFT size {fft_size} is shorter than the {frame_len}-sample frame"
            )));
        }
        Ok(Self { frame_len, hop, fft_size, window, sample_rate_hz })
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.sample_rate_hz) / self.fft_size as f64
    }

    pub fn frame_count(&self, n_samples: usize) -> usize {
        if n_samples < self.frame_len {
            0
        } else {
            1 + (n_samples - self.frame_len) / self.hop
        }
    }
}

/// Splits `samples` into full frames; a trailing partial frame is dropped.
pub fn frame_signal<'a>(samples: &'a [f64], framing: &Framing) -> Result<Vec<&'a [f64]>> {
    let count = framing.frame_count(samples.len());
    if count == 0 {
        return Err(Error::TooShort { samples: samples.len(), frame_len: framing.frame_len });
    }
    Ok((0..count)
        .map(|i| &samples[i * framing.hop..i * framing.hop + framing.frame_len])
        .collect())
}
