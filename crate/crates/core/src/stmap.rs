//! Channel × time gamma-energy maps and seizure build-up detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recording::{Band, Recording};
use crate::stats::{mean, moving_average, std_dev};
use crate::tfmap::{wavelet_transform, MorletSpec};

/// Fraction of the record used as the pre-ictal baseline.
pub const BASELINE_FRACTION: f64 = 0.2;
pub const MIN_BASELINE_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatioTemporalMap {
    pub labels: Vec<String>,
    pub times_s: Vec<f64>,
    /// `values[channel][time]`.
    pub values: Vec<Vec<f64>>,
    pub sample_rate_hz: f64,
    pub gamma_band: Band,
    pub norm_band: Option<Band>,
    pub smoothed_ms: f64,
    pub log_scaled: bool,
}

impl SpatioTemporalMap {
    pub fn n_channels(&self) -> usize {
        self.values.len()
    }

    pub fn n_times(&self) -> usize {
        self.times_s.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBuildup {
    pub label: String,
    pub peak_value: f64,
    pub onset_s: Option<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildupReport {
    pub onset_s: Option<f64>,
    /// Descending by peak value.
    pub ranked_channels: Vec<ChannelBuildup>,
    /// The `k_sigma` the per-channel thresholds were built from.
    pub threshold_used: f64,
}

impl BuildupReport {
    pub fn top_channel(&self) -> Option<&str> {
        self.ranked_channels.first().map(|c| c.label.as_str())
    }
}

/// Per channel, Morlet power averaged over the 1 Hz grid inside `band`.
pub fn band_energy_map(rec: &Recording, band: Band, omega: f64) -> Result<SpatioTemporalMap> {
    let fs = rec.sample_rate_hz();
    band.validate(fs)?;
    let spec = MorletSpec::new(omega, band.grid());
    let values = rec
        .data()
        .par_iter()
        .map(|x| {
            let tf = wavelet_transform(x, fs, &spec)?;
            let nf = tf.power.len() as f64;
            let mut row = vec![0.0; x.len()];
            for p in &tf.power {
                for (r, v) in row.iter_mut().zip(p) {
                    *r += v;
                }
            }
            row.iter_mut().for_each(|r| *r /= nf);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpatioTemporalMap {
        labels: rec.labels().to_vec(),
        times_s: (0..rec.n_samples()).map(|i| i as f64 / fs).collect(),
        values,
        sample_rate_hz: fs,
        gamma_band: band,
        norm_band: None,
        smoothed_ms: 0.0,
        log_scaled: false,
    })
}

/// `1e-12 ×` the global mean of the low-band map.
pub fn default_epsilon(low_map: &SpatioTemporalMap) -> f64 {
    let n: usize = low_map.values.iter().map(Vec::len).sum();
    let total: f64 = low_map.values.iter().flatten().sum();
    if n == 0 {
        0.0
    } else {
        1e-12 * total / n as f64
    }
}

/// `1e-12 ×` each row's mean low-band power. A row with no low-band power
/// falls back to the global value. Unlike a single global epsilon this
/// scales with each channel's gain, so normalized rows are gain-invariant.
pub fn channel_epsilons(low_map: &SpatioTemporalMap) -> Vec<f64> {
    let global = default_epsilon(low_map);
    low_map
        .values
        .iter()
        .map(|row| {
            let m = mean(row);
            if m > 0.0 {
                1e-12 * m
            } else {
                global
            }
        })
        .collect()
}

/// Pointwise `gamma / (low + epsilon)`.
pub fn normalize_by_low_band(
    gamma_map: &SpatioTemporalMap,
    low_map: &SpatioTemporalMap,
    epsilon: f64,
) -> Result<SpatioTemporalMap> {
    normalize_rows(gamma_map, low_map, &vec![epsilon; low_map.n_channels()])
}

/// Pointwise `gamma / (low + epsilon[channel])`.
pub fn normalize_rows(
    gamma_map: &SpatioTemporalMap,
    low_map: &SpatioTemporalMap,
    epsilons: &[f64],
) -> Result<SpatioTemporalMap> {
    if gamma_map.n_channels() != low_map.n_channels() || gamma_map.times_s != low_map.times_s {
        return Err(Error::ShapeMismatch(format!(
            "gamma map {}×{} vs low-band map {}×{}",
            gamma_map.n_channels(),
            gamma_map.n_times(),
            low_map.n_channels(),
            low_map.n_times()
        )));
    }
    if epsilons.len() != low_map.n_channels() {
        return Err(Error::ShapeMismatch(format!(
            "{} epsilons for {} channels",
            epsilons.len(),
            low_map.n_channels()
        )));
    }
    if !epsilons.iter().all(|e| *e >= 0.0) {
        return Err(Error::param("epsilon", "must be >= 0"));
    }
    let values = gamma_map
        .values
        .iter()
        .zip(&low_map.values)
        .zip(epsilons)
        .map(|((g, l), &epsilon)| {
            g.iter()
                .zip(l)
                .map(|(g, l)| {
                    let d = l + epsilon;
                    if d > 0.0 {
                        g / d
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(SpatioTemporalMap {
        values,
        norm_band: Some(low_map.gamma_band),
        ..gamma_map.clone()
    })
}

/// Centered moving average of `window_ms` along time, per row.
pub fn smooth_map(map: &SpatioTemporalMap, window_ms: f64) -> Result<SpatioTemporalMap> {
    if window_ms.is_nan() || window_ms < 0.0 {
        return Err(Error::param("window_ms", "must be >= 0"));
    }
    let half = (window_ms * map.sample_rate_hz / 2000.0).round() as usize;
    let values = map
        .values
        .par_iter()
        .map(|row| moving_average(row, half))
        .collect();
    Ok(SpatioTemporalMap {
        values,
        smoothed_ms: window_ms,
        ..map.clone()
    })
}

/// `log10` of every value (floored at the smallest positive normal).
/// Detection operates on linear values; this is for output only.
pub fn log_scale(map: &SpatioTemporalMap) -> SpatioTemporalMap {
    SpatioTemporalMap {
        values: map
            .values
            .iter()
            .map(|r| r.iter().map(|v| v.max(f64::MIN_POSITIVE).log10()).collect())
            .collect(),
        log_scaled: true,
        ..map.clone()
    }
}

/// Per channel, the first time the value stays above `μ + k_sigma·σ`
/// (baseline over the first 20 % of the record) for `min_duration_ms`.
pub fn detect_buildup(
    map: &SpatioTemporalMap,
    k_sigma: f64,
    min_duration_ms: f64,
) -> Result<BuildupReport> {
    let fs = map.sample_rate_hz;
    let n = map.n_times();
    let baseline_len = (BASELINE_FRACTION * n as f64).floor() as usize;
    if (baseline_len as f64) / fs < MIN_BASELINE_S {
        return Err(Error::TooShort(format!(
            "baseline of {:.3} s (first 20% of record) is shorter than {MIN_BASELINE_S} s",
            baseline_len as f64 / fs
        )));
    }
    if !(k_sigma.is_finite() && min_duration_ms >= 0.0) {
        return Err(Error::param(
            "k_sigma",
            "k_sigma must be finite and min_duration_ms >= 0",
        ));
    }
    let min_len = ((min_duration_ms * fs / 1000.0).ceil() as usize).max(1);
    let mut channels: Vec<ChannelBuildup> = map
        .values
        .iter()
        .zip(&map.labels)
        .map(|(row, label)| {
            let base = &row[..baseline_len];
            let threshold = mean(base) + k_sigma * std_dev(base);
            let mut run = 0usize;
            let mut onset = None;
            for (i, &v) in row.iter().enumerate() {
                if v > threshold {
                    run += 1;
                    if run >= min_len {
                        onset = Some(map.times_s[i + 1 - run]);
                        break;
                    }
                } else {
                    run = 0;
                }
            }
            ChannelBuildup {
                label: label.clone(),
                peak_value: row.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                onset_s: onset,
                threshold,
            }
        })
        .collect();
    // stable: ties keep channel order
    channels.sort_by(|a, b| b.peak_value.total_cmp(&a.peak_value));
    let onset_s = channels.iter().filter_map(|c| c.onset_s).reduce(f64::min);
    Ok(BuildupReport {
        onset_s,
        ranked_channels: channels,
        threshold_used: k_sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StmapConfig {
    pub gamma_band: Band,
    pub norm_band: Band,
    pub omega: f64,
    pub smooth_ms: f64,
    pub k_sigma: f64,
    pub min_duration_ms: f64,
}

impl Default for StmapConfig {
    fn default() -> Self {
        StmapConfig {
            gamma_band: Band::new(65.0, 85.0),
            norm_band: Band::new(8.0, 30.0),
            omega: 5.0,
            smooth_ms: 500.0,
            k_sigma: 3.0,
            min_duration_ms: 300.0,
        }
    }
}

/// Gamma map of `gamma_source`, normalized by the low-band map of
/// `norm_source`, smoothed, then scanned for build-up.
pub fn stmap_pipeline(
    gamma_source: &Recording,
    norm_source: &Recording,
    cfg: &StmapConfig,
) -> Result<(SpatioTemporalMap, BuildupReport)> {
    let gamma = band_energy_map(gamma_source, cfg.gamma_band, cfg.omega)?;
    let low = band_energy_map(norm_source, cfg.norm_band, cfg.omega)?;
    let normalized = normalize_rows(&gamma, &low, &channel_epsilons(&low))?;
    let smoothed = smooth_map(&normalized, cfg.smooth_ms)?;
    let report = detect_buildup(&smoothed, cfg.k_sigma, cfg.min_duration_ms)?;
    Ok((smoothed, report))
}
