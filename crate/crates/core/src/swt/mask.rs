//! Rectangular time masks over wavelet planes.
//!
//! The automatic rule looks at each plane's coefficient envelope (|c| under a
//! 50 ms moving average). Runs where the envelope reaches
//! `threshold_fraction × peak` and last less than 200 ms are transient,
//! spike-like energy and get zeroed. Everything else, including long
//! supra-threshold runs of sustained oscillation, is kept.

use crate::error::{Error, Result};
use crate::fir::bandpass_filter;
use crate::recording::{Band, Recording};
use crate::stats::{moving_average, true_runs};

use super::{iswt_reconstruct, swt_decompose, Wavelet, WaveletPlanes};

const ENVELOPE_WINDOW_S: f64 = 0.050;
const MAX_TRANSIENT_S: f64 = 0.200;

#[derive(Debug, Clone, PartialEq)]
pub enum LevelMask {
    KeepAll,
    ZeroAll,
    /// Keep only these `[start_s, end_s)` intervals.
    Keep(Vec<(f64, f64)>),
    /// Derive keep-intervals from the plane itself.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    /// One entry per detail level, finest first.
    pub details: Vec<LevelMask>,
    pub approx: LevelMask,
    pub threshold_fraction: f64,
}

impl MaskSpec {
    pub fn uniform(mask: LevelMask, levels: usize, threshold_fraction: f64) -> Self {
        MaskSpec {
            details: vec![mask.clone(); levels],
            approx: mask,
            threshold_fraction,
        }
    }

    pub fn keep_all(levels: usize) -> Self {
        MaskSpec::uniform(LevelMask::KeepAll, levels, 0.5)
    }

    pub fn zero_all(levels: usize) -> Self {
        MaskSpec::uniform(LevelMask::ZeroAll, levels, 0.5)
    }

    pub fn auto(levels: usize, threshold_fraction: f64) -> Self {
        MaskSpec::uniform(LevelMask::Auto, levels, threshold_fraction)
    }

    fn validate(&self, levels: usize, duration_s: f64) -> Result<()> {
        if self.details.len() != levels {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} detail levels, planes have {levels}",
                self.details.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold_fraction) {
            return Err(Error::param("threshold_fraction", "must lie in [0, 1]"));
        }
        for m in self.details.iter().chain(std::iter::once(&self.approx)) {
            if let LevelMask::Keep(intervals) = m {
                let mut prev_end = f64::NEG_INFINITY;
                let mut sorted = intervals.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                for &(s, e) in &sorted {
                    if !(s >= 0.0 && e > s && e <= duration_s + 1e-9) {
                        return Err(Error::param(
                            "mask",
                            format!("interval [{s}, {e}) outside record of {duration_s} s"),
                        ));
                    }
                    if s < prev_end {
                        return Err(Error::param(
                            "mask",
                            format!("overlapping interval at {s} s"),
                        ));
                    }
                    prev_end = e;
                }
            }
        }
        Ok(())
    }
}

/// Keep-intervals for one plane under the automatic rule.
pub fn derive_auto_intervals(
    plane: &[f64],
    sample_rate_hz: f64,
    threshold_fraction: f64,
) -> Vec<(f64, f64)> {
    let n = plane.len();
    let duration = n as f64 / sample_rate_hz;
    let half = ((ENVELOPE_WINDOW_S * sample_rate_hz) / 2.0).round() as usize;
    let magnitude: Vec<f64> = plane.iter().map(|v| v.abs()).collect();
    let envelope = moving_average(&magnitude, half);
    let peak = envelope.iter().cloned().fold(0.0, f64::max);
    let threshold = threshold_fraction * peak;
    if peak <= 0.0 || threshold <= 0.0 {
        return vec![(0.0, duration)];
    }
    let max_run = (MAX_TRANSIENT_S * sample_rate_hz).round() as usize;
    let supra: Vec<bool> = envelope.iter().map(|&e| e >= threshold).collect();
    let mut keep = vec![true; n];
    for (s, e) in true_runs(&supra) {
        if e - s < max_run {
            keep[s..e].iter_mut().for_each(|k| *k = false);
        }
    }
    true_runs(&keep)
        .into_iter()
        .map(|(s, e)| (s as f64 / sample_rate_hz, e as f64 / sample_rate_hz))
        .collect()
}

fn keep_intervals(plane: &mut [f64], sample_rate_hz: f64, intervals: &[(f64, f64)]) {
    for (i, v) in plane.iter_mut().enumerate() {
        let t = i as f64 / sample_rate_hz;
        if !intervals.iter().any(|&(s, e)| t >= s && t < e) {
            *v = 0.0;
        }
    }
}

fn mask_plane(plane: &mut [f64], mask: &LevelMask, fs: f64, threshold_fraction: f64) {
    match mask {
        LevelMask::KeepAll => {}
        LevelMask::ZeroAll => plane.iter_mut().for_each(|v| *v = 0.0),
        LevelMask::Keep(intervals) => keep_intervals(plane, fs, intervals),
        LevelMask::Auto => {
            let intervals = derive_auto_intervals(plane, fs, threshold_fraction);
            keep_intervals(plane, fs, &intervals);
        }
    }
}

/// Zeroes coefficients outside each level's keep-intervals.
pub fn apply_mask(planes: &WaveletPlanes, mask: &MaskSpec) -> Result<WaveletPlanes> {
    let fs = planes.sample_rate_hz;
    mask.validate(planes.levels(), planes.len() as f64 / fs)?;
    let mut out = planes.clone();
    for (plane, m) in out.details.iter_mut().zip(&mask.details) {
        mask_plane(plane, m, fs, mask.threshold_fraction);
    }
    mask_plane(&mut out.approx, &mask.approx, fs, mask.threshold_fraction);
    Ok(out)
}

/// Per channel: decompose, mask, reconstruct. No band-pass.
pub fn swt_mask_recording(
    rec: &Recording,
    wavelet: &Wavelet,
    levels: usize,
    mask: &MaskSpec,
) -> Result<Recording> {
    let fs = rec.sample_rate_hz();
    rec.try_map_channels(|x| {
        let planes = swt_decompose(x, wavelet, levels, fs)?;
        iswt_reconstruct(&apply_mask(&planes, mask)?)
    })
}

/// Per channel: decompose, mask, reconstruct, then band-pass to `band`.
pub fn extract_oscillations_swt(
    rec: &Recording,
    wavelet: &Wavelet,
    levels: usize,
    band: Band,
    mask: &MaskSpec,
) -> Result<Recording> {
    band.validate(rec.sample_rate_hz())?;
    let masked = swt_mask_recording(rec, wavelet, levels, mask)?;
    bandpass_filter(&masked, band)
}
