//! Scores SWT masking and despiking against simulated ground truth.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::despike::despike_recording;
use crate::error::{Error, Result};
use crate::fir::{bandpass_filter, bandpass_signal};
use crate::recording::{Band, Recording};
use crate::simulate::{synthesize_recording, GroundTruth, SimulationSpec};
use crate::stats::pearson;
use crate::stmap::stmap_pipeline;
use crate::swt::swt_mask_recording;

/// Half-width of the window around each true spike used for the residual.
pub const RESIDUAL_HALF_WINDOW_S: f64 = 0.050;
/// Onset error accepted as a correct build-up detection.
pub const ONSET_TOLERANCE_S: f64 = 0.5;

fn check_shape(rec: &Recording, truth: &GroundTruth) -> Result<()> {
    let ok = truth.oscillation_component.len() == rec.n_channels()
        && truth
            .oscillation_component
            .iter()
            .all(|c| c.len() == rec.n_samples())
        && truth.spikes.len() == rec.n_channels()
        && truth.burst_windows.len() == rec.n_channels();
    if ok {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "recording is {}×{}, ground truth does not match",
            rec.n_channels(),
            rec.n_samples()
        )))
    }
}

fn interval_mask(n: usize, fs: f64, intervals: impl Iterator<Item = (f64, f64)>) -> Vec<bool> {
    let mut mask = vec![false; n];
    for (s, e) in intervals {
        let i0 = ((s * fs).round().max(0.0) as usize).min(n);
        let i1 = ((e * fs).round().max(0.0) as usize).min(n);
        mask[i0..i1.max(i0)].iter_mut().for_each(|m| *m = true);
    }
    mask
}

/// Energy of `filtered` inside ±50 ms of every true spike, over the same
/// windows' energy in the unfiltered recording. Overlapping windows count
/// once.
pub fn residual_spike_energy(filtered: &Recording, truth: &GroundTruth) -> Result<f64> {
    check_shape(filtered, truth)?;
    if truth.spikes.iter().all(Vec::is_empty) {
        return Err(Error::Undefined(
            "ground truth holds no spikes; residual undefined".into(),
        ));
    }
    let fs = filtered.sample_rate_hz();
    let raw = truth.recording_data();
    let (mut num, mut den) = (0.0, 0.0);
    for (ch, spikes) in truth.spikes.iter().enumerate() {
        let h = RESIDUAL_HALF_WINDOW_S;
        let mask = interval_mask(
            filtered.n_samples(),
            fs,
            spikes.iter().map(|s| (s.time_s - h, s.time_s + h)),
        );
        for ((m, y), x) in mask.iter().zip(filtered.channel(ch)).zip(&raw[ch]) {
            if *m {
                num += y * y;
                den += x * x;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Undefined(
            "recording is zero around every spike".into(),
        ));
    }
    Ok(num / den)
}

/// Correlation of band-passed `filtered` with the band-passed true
/// oscillation over each channel's burst windows, averaged over channels
/// that have bursts. A channel with a flat output counts as 0.
pub fn oscillation_recovery_score(
    filtered: &Recording,
    truth: &GroundTruth,
    band: Band,
) -> Result<f64> {
    check_shape(filtered, truth)?;
    let fs = filtered.sample_rate_hz();
    band.validate(fs)?;
    let mut scores = Vec::new();
    for (ch, windows) in truth.burst_windows.iter().enumerate() {
        if windows.is_empty() {
            continue;
        }
        let mask = interval_mask(
            filtered.n_samples(),
            fs,
            windows.iter().map(|w| (w.start_s, w.end_s)),
        );
        let fy = bandpass_signal(filtered.channel(ch), fs, band)?;
        let ft = bandpass_signal(&truth.oscillation_component[ch], fs, band)?;
        let pick = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(&mask)
                .filter(|(_, m)| **m)
                .map(|(x, _)| *x)
                .collect()
        };
        scores.push(pearson(&pick(&fy), &pick(&ft)).unwrap_or(0.0));
    }
    if scores.is_empty() {
        return Err(Error::Undefined(
            "ground truth holds no oscillation bursts".into(),
        ));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Swt,
    Despike,
    /// The raw recording, unfiltered.
    None,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Swt, Method::Despike, Method::None];

    pub fn name(self) -> &'static str {
        match self {
            Method::Swt => "swt",
            Method::Despike => "despike",
            Method::None => "none",
        }
    }
}

/// Applies a method. Returns the band-passed output and the signal before
/// band-pass, which is what the low-band normalization is computed from.
pub fn apply_method(
    method: Method,
    rec: &Recording,
    cfg: &RunConfig,
) -> Result<(Recording, Recording)> {
    match method {
        Method::Swt => {
            let masked = swt_mask_recording(rec, &cfg.wavelet()?, cfg.levels, &cfg.mask_spec())?;
            Ok((bandpass_filter(&masked, cfg.band)?, masked))
        }
        Method::Despike => {
            let d = despike_recording(rec, &cfg.despike_config())?.despiked;
            Ok((bandpass_filter(&d, cfg.band)?, d))
        }
        Method::None => Ok((rec.clone(), rec.clone())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    /// Residual of the spike-removal output, before the shared band-pass.
    pub spike_residual_fraction: Option<f64>,
    /// Same residual after band-pass. Dominated by the filter itself, which
    /// strips most window energy whatever the method did; kept for reference.
    pub spike_residual_fraction_bandpassed: Option<f64>,
    pub oscillation_recovery_corr: Option<f64>,
    pub buildup_onset_s: Option<f64>,
    pub buildup_onset_error_s: Option<f64>,
    pub buildup_top_channel: Option<String>,
    pub buildup_channel_correct: bool,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub swt: MethodReport,
    pub despike: MethodReport,
    pub none: MethodReport,
}

impl ComparisonReport {
    pub fn method(&self, m: Method) -> &MethodReport {
        match m {
            Method::Swt => &self.swt,
            Method::Despike => &self.despike,
            Method::None => &self.none,
        }
    }

    /// Copy with every runtime zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for m in [&mut r.swt, &mut r.despike, &mut r.none] {
            m.runtime_s = 0.0;
        }
        r
    }
}

pub fn evaluate_method(
    method: Method,
    rec: &Recording,
    truth: &GroundTruth,
    cfg: &RunConfig,
) -> Result<MethodReport> {
    let start = Instant::now();
    let (output, cleaned) = apply_method(method, rec, cfg)?;
    let (_, buildup) = stmap_pipeline(&output, &cleaned, &cfg.stmap_config())?;
    let runtime_s = start.elapsed().as_secs_f64();
    let top = buildup.top_channel().map(str::to_string);
    let truth_label = rec.labels().get(truth.seizure_channel);
    Ok(MethodReport {
        spike_residual_fraction: residual_spike_energy(&cleaned, truth).ok(),
        spike_residual_fraction_bandpassed: residual_spike_energy(&output, truth).ok(),
        oscillation_recovery_corr: oscillation_recovery_score(&output, truth, cfg.band).ok(),
        buildup_onset_s: buildup.onset_s,
        buildup_onset_error_s: buildup.onset_s.map(|t| (t - truth.ictal_onset_s).abs()),
        buildup_channel_correct: top.as_ref() == truth_label,
        buildup_top_channel: top,
        runtime_s,
    })
}

/// Simulates one recording and scores all three methods on it.
pub fn compare_methods(spec: &SimulationSpec, cfg: &RunConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let (rec, truth) = synthesize_recording(spec)?;
    Ok(ComparisonReport {
        seed: spec.seed,
        swt: evaluate_method(Method::Swt, &rec, &truth, cfg)?,
        despike: evaluate_method(Method::Despike, &rec, &truth, cfg)?,
        none: evaluate_method(Method::None, &rec, &truth, cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean_spike_residual_fraction: Option<f64>,
    pub mean_oscillation_recovery_corr: Option<f64>,
    pub mean_onset_error_s: Option<f64>,
    /// Runs whose top-ranked channel is the seizure channel.
    pub channel_correct_runs: usize,
    /// Runs with the right channel and an onset within 0.5 s.
    pub buildup_correct_runs: usize,
    pub total_runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedReport {
    pub spec: SimulationSpec,
    pub n_runs: usize,
    /// Runs where despike leaves less spike energy than SWT.
    pub despike_beats_swt_runs: usize,
    pub swt: MethodSummary,
    pub despike: MethodSummary,
    pub none: MethodSummary,
    pub per_seed: Vec<ComparisonReport>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(runs: &[ComparisonReport], m: Method) -> MethodSummary {
    let reports: Vec<&MethodReport> = runs.iter().map(|r| r.method(m)).collect();
    MethodSummary {
        mean_spike_residual_fraction: mean_of(reports.iter().map(|r| r.spike_residual_fraction)),
        mean_oscillation_recovery_corr: mean_of(
            reports.iter().map(|r| r.oscillation_recovery_corr),
        ),
        mean_onset_error_s: mean_of(reports.iter().map(|r| r.buildup_onset_error_s)),
        channel_correct_runs: reports.iter().filter(|r| r.buildup_channel_correct).count(),
        buildup_correct_runs: reports
            .iter()
            .filter(|r| {
                r.buildup_channel_correct
                    && r.buildup_onset_error_s
                        .is_some_and(|e| e <= ONSET_TOLERANCE_S)
            })
            .count(),
        total_runtime_s: reports.iter().map(|r| r.runtime_s).sum(),
    }
}

/// Runs [`compare_methods`] for `spec` under each seed, in parallel.
pub fn compare_seeds(
    spec: &SimulationSpec,
    cfg: &RunConfig,
    seeds: &[u64],
) -> Result<MultiSeedReport> {
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            compare_methods(
                &SimulationSpec {
                    seed,
                    ..spec.clone()
                },
                cfg,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let despike_beats_swt_runs = per_seed
        .iter()
        .filter(|r| {
            match (
                r.despike.spike_residual_fraction,
                r.swt.spike_residual_fraction,
            ) {
                (Some(d), Some(s)) => d < s,
                _ => false,
            }
        })
        .count();
    Ok(MultiSeedReport {
        spec: spec.clone(),
        n_runs: per_seed.len(),
        despike_beats_swt_runs,
        swt: summarize(&per_seed, Method::Swt),
        despike: summarize(&per_seed, Method::Despike),
        none: summarize(&per_seed, Method::None),
        per_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SimulationSpec {
        SimulationSpec {
            n_channels: 2,
            seizure_channel: 1,
            duration_s: 8.0,
            ictal_onset_s: 5.0,
            ..SimulationSpec::default()
        }
    }

    #[test]
    fn identity_zero_and_truth_residuals() {
        let (rec, truth) = synthesize_recording(&small_spec()).unwrap();
        assert_eq!(residual_spike_energy(&rec, &truth).unwrap(), 1.0);
        assert_eq!(
            residual_spike_energy(&rec.zeros_like(), &truth).unwrap(),
            0.0
        );
    }

    #[test]
    fn self_and_negated_correlation() {
        let (rec, truth) = synthesize_recording(&small_spec()).unwrap();
        let osc = rec.with_data(truth.oscillation_component.clone()).unwrap();
        let band = Band::new(65.0, 85.0);
        assert!((oscillation_recovery_score(&osc, &truth, band).unwrap() - 1.0).abs() < 1e-9);
        let neg = rec
            .with_data(
                truth
                    .oscillation_component
                    .iter()
                    .map(|c| c.iter().map(|v| -v).collect())
                    .collect(),
            )
            .unwrap();
        assert!((oscillation_recovery_score(&neg, &truth, band).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_spikes_is_undefined() {
        let spec = SimulationSpec {
            spike_rate_hz: 0.0,
            ..small_spec()
        };
        let (rec, truth) = synthesize_recording(&spec).unwrap();
        assert!(matches!(
            residual_spike_energy(&rec, &truth),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (rec, truth) = synthesize_recording(&small_spec()).unwrap();
        let short = Recording::with_default_labels(1000.0, vec![vec![0.0; 10]; 2]).unwrap();
        assert!(matches!(
            residual_spike_energy(&short, &truth),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(oscillation_recovery_score(&rec, &truth, Band::new(65.0, 600.0)).is_err());
    }
}
