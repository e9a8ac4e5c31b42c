//! Time-domain frame features.

/// Fraction of adjacent sample pairs whose signs differ, counting zero as
/// positive.
pub fn zero_crossing_rate(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 / (frame.len() - 1) as f64
}

/// Mean square of the raw (unwindowed) samples.
pub fn short_term_energy(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64
}

pub const PITCH_MIN_HZ: f64 = 60.0;
pub const PITCH_MAX_HZ: f64 = 1000.0;

/// Lag range in samples covering pitches between 60 Hz and 1 kHz.
pub fn pitch_lags(sample_rate_hz: u32) -> (usize, usize) {
    let rate = f64::from(sample_rate_hz);
    let lo = (rate / PITCH_MAX_HZ).ceil().max(1.0) as usize;
    let hi = (rate / PITCH_MIN_HZ).floor() as usize;
    (lo, hi.max(lo))
}

/// Peak normalized autocorrelation over the pitch lag range, clamped to
/// [0, 1]. Each lag is normalized by the energies of the two overlapping
/// windows, so a periodic signal scores 1 at its period whatever the frame
/// length. Lags that leave no overlap are skipped.
pub fn harmonic_ratio(frame: &[f64], sample_rate_hz: u32) -> f64 {
    let n = frame.len();
    if frame.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let (lo, hi) = pitch_lags(sample_rate_hz);
    let hi = hi.min(n.saturating_sub(1));

    // Prefix sums of x^2 give both window energies in O(1) per lag.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &x in frame {
        prefix.push(prefix.last().unwrap() + x * x);
    }
    let total = prefix[n];

    let mut best: f64 = 0.0;
    for lag in lo..=hi {
        let head = prefix[n - lag];
        let tail = total - prefix[lag];
        let denom = (head * tail).sqrt();
        if denom <= 0.0 {
            continue;
        }
        let r: f64 = frame[..n - lag].iter().zip(&frame[lag..]).map(|(a, b)| a * b).sum();
        best = best.max(r / denom);
    }
    best.clamp(0.0, 1.0)
}
