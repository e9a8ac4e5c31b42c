//! Shape descriptors of one-sided magnitude spectra.

use super::frame::Framing;

pub const ROLLOFF_FRACTION: f64 = 0.90;
const FLATNESS_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDescriptors {
    pub centroid: f64,
    pub spread: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub entropy: f64,
    pub flatness: f64,
    pub crest: f64,
    pub rolloff: f64,
    pub flux: f64,
}

impl SpectralDescriptors {
    /// Values assigned to an all-zero frame.
    pub const SILENT: Self = Self {
        centroid: 0.0,
        spread: 0.0,
        skewness: 0.0,
        kurtosis: 0.0,
        entropy: 1.0,
        flatness: 1.0,
        crest: 1.0,
        rolloff: 0.0,
        flux: 0.0,
    };
}

fn distribution(magnitude: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = magnitude.iter().sum();
    (total > 0.0).then(|| magnitude.iter().map(|m| m / total).collect())
}

/// Descriptors of a single spectrum with flux left at zero.
pub fn describe(magnitude: &[f64], framing: &Framing) -> SpectralDescriptors {
    let Some(p) = distribution(magnitude) else {
        return SpectralDescriptors::SILENT;
    };
    let n = magnitude.len() as f64;
    let freqs: Vec<f64> = (0..magnitude.len()).map(|k| framing.bin_hz(k)).collect();

    let centroid: f64 = p.iter().zip(&freqs).map(|(p, f)| p * f).sum();
    let moment = |order: i32| -> f64 {
        p.iter().zip(&freqs).map(|(p, f)| p * (f - centroid).powi(order)).sum()
    };
    let spread = moment(2).sqrt();
    let (skewness, kurtosis) = if spread > 0.0 {
        (moment(3) / spread.powi(3), moment(4) / spread.powi(4))
    } else {
        (0.0, 0.0)
    };

    let entropy = -p.iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>() / n.log2();

    let mean = magnitude.iter().sum::<f64>() / n;
    let log_mean = magnitude.iter().map(|m| m.max(FLATNESS_FLOOR).ln()).sum::<f64>() / n;
    let flatness = (log_mean.exp() / mean).min(1.0);
    let crest = magnitude.iter().copied().fold(0.0, f64::max) / mean;

    let energy: Vec<f64> = magnitude.iter().map(|m| m * m).collect();
    let threshold = ROLLOFF_FRACTION * energy.iter().sum::<f64>();
    let mut cumulative = 0.0;
    let rolloff_bin = energy
        .iter()
        .position(|e| {
            cumulative += e;
            cumulative >= threshold
        })
        .unwrap_or(energy.len() - 1);

    SpectralDescriptors {
        centroid,
        spread,
        skewness,
        kurtosis,
        entropy,
        flatness,
        crest,
        rolloff: freqs[rolloff_bin],
        flux: 0.0,
    }
}

/// Per-frame descriptors. Flux compares each frame's normalized spectrum
/// with the previous frame's; it is zero for the first frame and whenever
/// either frame is silent.
pub fn spectral_descriptors(spectra: &[Vec<f64>], framing: &Framing) -> Vec<SpectralDescriptors> {
    let mut previous: Option<Vec<f64>> = None;
    spectra
        .iter()
        .map(|mag| {
            let mut d = describe(mag, framing);
            let current = distribution(mag);
            if let (Some(prev), Some(cur)) = (&previous, &current) {
                d.flux = prev.iter().zip(cur).map(|(a, b)| (b - a).powi(2)).sum();
            }
            previous = current;
            d
        })
        .collect()
}
