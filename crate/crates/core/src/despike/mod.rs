//! Spike removal by template fitting and subtraction.
//!
//! Per channel: detect transients, fit the biphasic Gaussian template to each
//! (jointly when fitting windows overlap), rescale each fitted template by a
//! least-squares projection onto the data, and subtract the summed templates.

mod detect;
mod fit;
mod model;

pub use detect::{detect_spikes, emphasize, DetectConfig, SpikeCandidate};
pub use fit::{
    fit_spike_model, fit_templates, project_amplitudes, FitBounds, FitOptions, FitOutcome,
    FitStatus,
};
pub use model::{evaluate_spike_model, SpikeModelParams};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::recording::Recording;
use crate::stats::median;

const DEFAULT_HALF_WIDTH_S: f64 = 0.040;
const MIN_HALF_WIDTH_S: f64 = 0.005;
const MAX_HALF_WIDTH_S: f64 = 0.100;
/// Starting asymmetries, in units of the initial lobe half-width. The cost
/// surface has separate basins for cusped and separated lobes, so each
/// cluster is fitted from every start and the lowest residual wins.
const ASYMMETRY_STARTS: [f64; 5] = [-0.4, -0.15, 0.0, 0.15, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DespikeConfig {
    pub detect: DetectConfig,
    /// Half-width of the fitting window around each candidate.
    pub window_half_s: f64,
    pub bounds: FitBounds,
    pub fit: FitOptions,
}

impl Default for DespikeConfig {
    fn default() -> Self {
        DespikeConfig {
            detect: DetectConfig::default(),
            window_half_s: 0.150,
            bounds: FitBounds::default(),
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeFit {
    pub candidate: SpikeCandidate,
    pub params: SpikeModelParams,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DespikeResult {
    pub despiked: Recording,
    pub spike_train: Vec<Vec<SpikeFit>>,
    pub model_signal: Vec<Vec<f64>>,
}

/// Moment-style starting point: shift at the detected edge, amplitude from
/// the step height, scale from the half-amplitude width of the lobes.
fn initial_params(signal: &[f64], fs: f64, cand: &SpikeCandidate) -> SpikeModelParams {
    let polarity = if cand.peak_amplitude < 0.0 { -1.0 } else { 1.0 };
    let amplitude = (cand.peak_amplitude.abs() / 2.0).max(f64::MIN_POSITIVE);
    let n = signal.len();
    let i0 = ((cand.window.0 * fs).round() as usize).min(n);
    let i1 = ((cand.window.1 * fs).round() as usize).min(n);
    let baseline = median(&signal[i0..i1]).unwrap_or(0.0);
    let centre = (cand.peak_time_s * fs - 0.5).round() as isize; // last sample before the edge
    let max_steps = (MAX_HALF_WIDTH_S * fs).ceil() as isize;
    let half_amp = amplitude / 2.0;

    let walk = |start: isize, dir: isize, lobe_sign: f64| -> Option<f64> {
        for s in 0..max_steps {
            let i = start + dir * s;
            if i < 0 || i >= n as isize {
                return None;
            }
            if lobe_sign * polarity * (signal[i as usize] - baseline) <= half_amp {
                return Some((s as f64 + 0.5) / fs);
            }
        }
        None
    };
    let widths: Vec<f64> = [walk(centre + 1, 1, 1.0), walk(centre, -1, -1.0)]
        .into_iter()
        .flatten()
        .collect();
    let half_width = if widths.is_empty() {
        DEFAULT_HALF_WIDTH_S
    } else {
        (widths.iter().sum::<f64>() / widths.len() as f64).clamp(MIN_HALF_WIDTH_S, MAX_HALF_WIDTH_S)
    };
    SpikeModelParams::new(
        amplitude,
        cand.peak_time_s,
        SpikeModelParams::scale_for_half_width(half_width),
        0.0,
    )
    .with_polarity(polarity)
}

/// Groups candidates whose fitting windows overlap.
fn cluster(cands: &[SpikeCandidate]) -> Vec<Vec<SpikeCandidate>> {
    let mut groups: Vec<Vec<SpikeCandidate>> = Vec::new();
    let mut end = f64::NEG_INFINITY;
    for c in cands {
        match groups.last_mut() {
            Some(g) if c.window.0 < end => {
                g.push(*c);
                end = end.max(c.window.1);
            }
            _ => {
                groups.push(vec![*c]);
                end = c.window.1;
            }
        }
    }
    groups
}

fn add_template(model: &mut [f64], fs: f64, p: &SpikeModelParams) {
    let n = model.len();
    let r = p.support_radius_s(1e-12);
    let i0 = ((p.shift_s - r) * fs).floor().max(0.0) as usize;
    let i1 = (((p.shift_s + r) * fs).ceil().max(0.0) as usize).min(n.saturating_sub(1));
    for (i, m) in model.iter_mut().enumerate().take(i1 + 1).skip(i0) {
        *m += p.value(i as f64 / fs);
    }
}

/// Fits and sums the spike templates for one channel. Returns the model
/// signal and the accepted fits.
pub fn spike_model_channel(
    signal: &[f64],
    sample_rate_hz: f64,
    cfg: &DespikeConfig,
    channel: usize,
) -> Result<(Vec<f64>, Vec<SpikeFit>)> {
    let fs = sample_rate_hz;
    let cands = detect_spikes(signal, fs, &cfg.detect, channel, cfg.window_half_s);
    let mut model = vec![0.0; signal.len()];
    let mut fits = Vec::with_capacity(cands.len());
    for group in cluster(&cands) {
        let window = (
            group
                .iter()
                .map(|c| c.window.0)
                .fold(f64::INFINITY, f64::min),
            group
                .iter()
                .map(|c| c.window.1)
                .fold(f64::NEG_INFINITY, f64::max),
        );
        if ((window.1 - window.0) * fs).round() < fit::MIN_WINDOW_SAMPLES as f64 {
            continue;
        }
        let init: Vec<SpikeModelParams> = group
            .iter()
            .map(|c| initial_params(signal, fs, c))
            .collect();
        let mut outcome: Option<FitOutcome> = None;
        for &g in &ASYMMETRY_STARTS {
            let seeded: Vec<SpikeModelParams> = init
                .iter()
                .map(|p| SpikeModelParams {
                    asymmetry_s: g * p.half_width_s(),
                    ..*p
                })
                .collect();
            let o = fit_templates(signal, fs, window, &seeded, &cfg.bounds, &cfg.fit)?;
            let better = match &outcome {
                None => true,
                Some(b) => {
                    b.status == FitStatus::NonFinite
                        || (o.status != FitStatus::NonFinite && o.residual_rms < b.residual_rms)
                }
            };
            if better {
                outcome = Some(o);
            }
        }
        let Some(outcome) = outcome.filter(|o| o.status != FitStatus::NonFinite) else {
            continue;
        };
        let factors = project_amplitudes(signal, fs, window, &outcome.params)?;
        for ((cand, mut p), c) in group.iter().zip(outcome.params).zip(factors) {
            if !(c.is_finite() && c > 0.0) {
                continue;
            }
            p.amplitude *= c;
            add_template(&mut model, fs, &p);
            fits.push(SpikeFit {
                candidate: *cand,
                params: p,
                residual_rms: outcome.residual_rms,
            });
        }
    }
    Ok((model, fits))
}

/// Removes spikes from one channel: `despiked = signal - model`.
pub fn despike_channel(
    signal: &[f64],
    sample_rate_hz: f64,
    cfg: &DespikeConfig,
) -> Result<(Vec<f64>, Vec<SpikeFit>)> {
    let (model, fits) = spike_model_channel(signal, sample_rate_hz, cfg, 0)?;
    let despiked = signal.iter().zip(&model).map(|(x, m)| x - m).collect();
    Ok((despiked, fits))
}

/// Despikes every channel independently.
pub fn despike_recording(rec: &Recording, cfg: &DespikeConfig) -> Result<DespikeResult> {
    let fs = rec.sample_rate_hz();
    let per_channel = rec
        .data()
        .par_iter()
        .enumerate()
        .map(|(ch, x)| spike_model_channel(x, fs, cfg, ch))
        .collect::<Result<Vec<_>>>()?;
    let mut model_signal = Vec::with_capacity(rec.n_channels());
    let mut spike_train = Vec::with_capacity(rec.n_channels());
    let mut despiked = Vec::with_capacity(rec.n_channels());
    for (x, (model, fits)) in rec.data().iter().zip(per_channel) {
        despiked.push(x.iter().zip(&model).map(|(a, m)| a - m).collect());
        model_signal.push(model);
        spike_train.push(fits);
    }
    Ok(DespikeResult {
        despiked: rec.with_data(despiked)?,
        spike_train,
        model_signal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_spikes_means_identity() {
        let x: Vec<f64> = (0..3000).map(|i| (i as f64 * 0.47).sin()).collect();
        let (y, fits) = despike_channel(&x, 1000.0, &DespikeConfig::default()).unwrap();
        assert!(fits.is_empty());
        assert_eq!(y, x);
    }

    #[test]
    fn clustering_merges_overlapping_windows() {
        let c = |t: f64| SpikeCandidate {
            channel: 0,
            peak_time_s: t,
            peak_amplitude: 1.0,
            window: (t - 0.15, t + 0.15),
        };
        let groups = cluster(&[c(1.0), c(1.2), c(2.0), c(3.0), c(3.29)]);
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 1, 2]);
    }

    #[test]
    fn initial_width_tracks_lobe() {
        let fs = 1000.0;
        let p = SpikeModelParams::new(
            5.0,
            1.0005,
            SpikeModelParams::scale_for_half_width(0.05),
            0.0,
        );
        let x: Vec<f64> = (0..2000).map(|i| p.value(i as f64 / fs)).collect();
        let cand = SpikeCandidate {
            channel: 0,
            peak_time_s: 1.0005,
            peak_amplitude: 9.8,
            window: (0.85, 1.15),
        };
        let init = initial_params(&x, fs, &cand);
        assert!(
            (init.half_width_s() - 0.05).abs() < 0.01,
            "{}",
            init.half_width_s()
        );
        assert_eq!(init.polarity, 1.0);
    }
}
