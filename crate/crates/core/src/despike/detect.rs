use serde::{Deserialize, Serialize};

use crate::stats::{reflect_index, robust_std};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Threshold in robust standard deviations of the emphasized signal.
    pub k: f64,
    pub min_separation_s: f64,
    /// Length of each half of the step-difference filter. One gamma period
    /// (about 13 ms for 75 Hz) puts a null of the box average in the band.
    pub emphasis_s: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            k: 4.0,
            min_separation_s: 0.080,
            emphasis_s: 0.013,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeCandidate {
    pub channel: usize,
    pub peak_time_s: f64,
    /// Signed step height at the peak, in signal units.
    pub peak_amplitude: f64,
    pub window: (f64, f64),
}

/// Step-difference high-pass: mean of the `w` samples after `i` minus the
/// mean of the `w` samples up to and including `i`. A sharp transition
/// between samples `i` and `i + 1` peaks here, while slow activity and
/// narrowband gamma are attenuated.
pub fn emphasize(signal: &[f64], sample_rate_hz: f64, half_s: f64) -> Vec<f64> {
    let n = signal.len();
    let w = ((half_s * sample_rate_hz).round() as isize).max(1);
    let at = |i: isize| signal[reflect_index(i, n)];
    let mut ahead: f64 = (1..=w).map(at).sum();
    let mut behind: f64 = (1 - w..=0).map(at).sum();
    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        if i > 0 {
            ahead += at(i + w) - at(i);
            behind += at(i) - at(i - w);
        }
        out.push((ahead - behind) / w as f64);
    }
    out
}

/// Finds transient candidates on one channel. `window_half_s` sets the
/// fitting window reported with each candidate.
pub fn detect_spikes(
    signal: &[f64],
    sample_rate_hz: f64,
    cfg: &DetectConfig,
    channel: usize,
    window_half_s: f64,
) -> Vec<SpikeCandidate> {
    let n = signal.len();
    if n < 3 {
        return Vec::new();
    }
    let e = emphasize(signal, sample_rate_hz, cfg.emphasis_s);
    let sigma = robust_std(&e);
    if sigma <= 0.0 {
        // degenerate: constant or almost everywhere constant input
        if e.iter().all(|&v| v == 0.0) {
            return Vec::new();
        }
    }
    let threshold = cfg.k * sigma;
    let mag: Vec<f64> = e.iter().map(|v| v.abs()).collect();
    // the step windows of the outermost samples rest on reflected data
    let w = ((cfg.emphasis_s * sample_rate_hz).round() as usize).max(1);
    let mut peaks: Vec<usize> = (w.min(n)..n.saturating_sub(w))
        .filter(|&i| {
            let left = if i == 0 {
                f64::NEG_INFINITY
            } else {
                mag[i - 1]
            };
            let right = if i + 1 == n {
                f64::NEG_INFINITY
            } else {
                mag[i + 1]
            };
            mag[i] > threshold && mag[i] >= left && mag[i] > right
        })
        .collect();
    // strongest first; keep a peak only if no stronger one lies within the separation
    peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
    let sep = (cfg.min_separation_s * sample_rate_hz).round() as usize;
    let mut accepted: Vec<usize> = Vec::new();
    for p in peaks {
        if accepted.iter().all(|&q| p.abs_diff(q) >= sep) {
            accepted.push(p);
        }
    }
    accepted.sort_unstable();
    let duration = n as f64 / sample_rate_hz;
    accepted
        .into_iter()
        .map(|i| {
            let t = (i as f64 + 0.5) / sample_rate_hz;
            SpikeCandidate {
                channel,
                peak_time_s: t,
                peak_amplitude: e[i],
                window: (
                    (t - window_half_s).max(0.0),
                    (t + window_half_s).min(duration),
                ),
            }
        })
        .collect()
}
