//! Linear-phase windowed-sinc band-pass filtering.
//!
//! The filter is applied centered (delay-compensated) on a symmetrically
//! reflected signal, so the net group delay is zero and event timing is kept.

use std::f64::consts::PI;

use crate::error::Result;
use crate::recording::{Band, Recording};
use crate::stats::reflect_index;

/// Odd tap count: six periods of the lower edge, and at least six periods of
/// the band width so narrow bands still get a flat passband.
pub fn bandpass_taps(sample_rate_hz: f64, band: Band) -> usize {
    let by_low = 6.0 * sample_rate_hz / band.low_hz;
    let by_width = 6.0 * sample_rate_hz / (band.high_hz - band.low_hz);
    let n = by_low.max(by_width).round() as usize;
    n | 1
}

/// Hamming-windowed sinc band-pass kernel, normalized to unit gain at the band center.
pub fn design_bandpass(sample_rate_hz: f64, band: Band) -> Result<Vec<f64>> {
    band.validate(sample_rate_hz)?;
    let n = bandpass_taps(sample_rate_hz, band);
    let m = (n / 2) as f64;
    let fl = band.low_hz / sample_rate_hz;
    let fh = band.high_hz / sample_rate_hz;
    let sinc = |x: f64| {
        if x == 0.0 {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        }
    };
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let k = i as f64 - m;
            let ideal = 2.0 * fh * sinc(2.0 * fh * k) - 2.0 * fl * sinc(2.0 * fl * k);
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            ideal * w
        })
        .collect();
    let fc = 0.5 * (band.low_hz + band.high_hz);
    let gain = magnitude_response(&taps, fc / sample_rate_hz);
    for t in &mut taps {
        *t /= gain;
    }
    Ok(taps)
}

/// |H(f)| for a kernel at normalized frequency `f` (cycles per sample).
pub fn magnitude_response(taps: &[f64], f: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (k, &h) in taps.iter().enumerate() {
        let ph = 2.0 * PI * f * k as f64;
        re += h * ph.cos();
        im -= h * ph.sin();
    }
    re.hypot(im)
}

/// Centered filtering of one channel with an odd-length kernel.
pub fn filter_centered(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    let half = (taps.len() / 2) as isize;
    (0..n as isize)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(k, &h)| h * x[reflect_index(i + k as isize - half, n)])
                .sum()
        })
        .collect()
}

pub fn bandpass_signal(x: &[f64], sample_rate_hz: f64, band: Band) -> Result<Vec<f64>> {
    let taps = design_bandpass(sample_rate_hz, band)?;
    Ok(filter_centered(x, &taps))
}

/// Band-passes every channel of `rec`.
pub fn bandpass_filter(rec: &Recording, band: Band) -> Result<Recording> {
    let taps = design_bandpass(rec.sample_rate_hz(), band)?;
    rec.try_map_channels(|x| Ok(filter_centered(x, &taps)))
}
