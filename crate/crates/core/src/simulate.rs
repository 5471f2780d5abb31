//! Synthetic pre-ictal / ictal recordings with known components.
//!
//! Each channel carries sparse Hann-windowed gamma bursts, biphasic spikes
//! (some placed on top of bursts), and white noise. From the ictal onset on,
//! the seizure channel switches to a sustained gamma oscillation.
//! Every random draw comes from a per-channel ChaCha stream derived from the
//! seed, so the output does not depend on how channels are scheduled.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::despike::SpikeModelParams;
use crate::error::{check_band, Error, Result};
use crate::recording::{default_labels, Band, Recording};
use crate::stats::mean_power;

/// Spikes keep at least this far apart and away from the record edges.
const SPIKE_MIN_GAP_S: f64 = 0.3;
const SPIKE_EDGE_MARGIN_S: f64 = 0.3;
const BURST_MIN_S: f64 = 0.2;
const BURST_MAX_S: f64 = 1.0;
const ICTAL_RISE_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_channels: usize,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Whole-record SNR of (spikes + oscillations) over noise. `f64::INFINITY`
    /// disables noise; it is written as `null` in JSON.
    #[serde(with = "snr_serde")]
    pub snr_db: f64,
    /// Mean spikes per second per channel.
    pub spike_rate_hz: f64,
    pub gamma_band: Band,
    /// Fraction of spikes placed inside oscillation bursts.
    pub overlap_fraction: f64,
    pub ictal_onset_s: f64,
    /// Zero-based index of the channel that turns ictal.
    pub seizure_channel: usize,
    /// Mean pre-ictal bursts per second per channel.
    pub burst_rate_hz: f64,
    pub burst_amplitude: f64,
    pub ictal_amplitude: f64,
    pub seed: u64,
}

mod snr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            n_channels: 6,
            sample_rate_hz: 1000.0,
            duration_s: 20.0,
            snr_db: 5.0,
            spike_rate_hz: 1.0,
            gamma_band: Band::new(65.0, 85.0),
            overlap_fraction: 0.3,
            ictal_onset_s: 10.0,
            seizure_channel: 3,
            burst_rate_hz: 0.5,
            burst_amplitude: 1.0,
            ictal_amplitude: 2.0,
            seed: 42,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels < 1 {
            return Err(Error::param("n_channels", "must be >= 1"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::param("sample_rate_hz", "must be > 0"));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::param("duration_s", "must be > 0"));
        }
        if self.n_samples() < 1 {
            return Err(Error::param("duration_s", "shorter than one sample"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::param("snr_db", "must be finite or +inf"));
        }
        if !(self.spike_rate_hz.is_finite() && self.spike_rate_hz >= 0.0) {
            return Err(Error::param("spike_rate_hz", "must be >= 0"));
        }
        check_band(
            self.gamma_band.low_hz,
            self.gamma_band.high_hz,
            self.sample_rate_hz,
        )
        .map_err(|e| Error::param("gamma_band", e.to_string()))?;
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            return Err(Error::param("overlap_fraction", "must lie in [0, 1]"));
        }
        if !(self.ictal_onset_s.is_finite() && self.ictal_onset_s >= 0.0) {
            return Err(Error::param("ictal_onset_s", "must be >= 0"));
        }
        if self.seizure_channel >= self.n_channels {
            return Err(Error::param(
                "seizure_channel",
                "must index an existing channel",
            ));
        }
        if !(self.burst_rate_hz.is_finite() && self.burst_rate_hz >= 0.0) {
            return Err(Error::param("burst_rate_hz", "must be >= 0"));
        }
        if !(self.burst_amplitude.is_finite() && self.burst_amplitude >= 0.0) {
            return Err(Error::param("burst_amplitude", "must be >= 0"));
        }
        if !(self.ictal_amplitude.is_finite() && self.ictal_amplitude >= 0.0) {
            return Err(Error::param("ictal_amplitude", "must be >= 0"));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub center_freq_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedSpike {
    pub time_s: f64,
    pub params: SpikeModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub spike_component: Vec<Vec<f64>>,
    pub oscillation_component: Vec<Vec<f64>>,
    pub noise_component: Vec<Vec<f64>>,
    pub burst_windows: Vec<Vec<BurstWindow>>,
    pub spikes: Vec<Vec<InjectedSpike>>,
    pub ictal_onset_s: f64,
    pub seizure_channel: usize,
}

impl GroundTruth {
    /// The noise-free signal, `spike + oscillation`.
    pub fn clean(&self) -> Vec<Vec<f64>> {
        self.spike_component
            .iter()
            .zip(&self.oscillation_component)
            .map(|(s, o)| s.iter().zip(o).map(|(a, b)| a + b).collect())
            .collect()
    }

    /// The recording these components sum to, bit-identical to the one
    /// returned alongside them.
    pub fn recording_data(&self) -> Vec<Vec<f64>> {
        self.clean()
            .iter()
            .zip(&self.noise_component)
            .map(|(c, e)| c.iter().zip(e).map(|(a, b)| a + b).collect())
            .collect()
    }
}

struct ChannelEvents {
    spikes: Vec<f64>,
    oscillation: Vec<f64>,
    bursts: Vec<BurstWindow>,
    injected: Vec<InjectedSpike>,
}

fn event_rng(seed: u64, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * channel as u64);
    rng
}

fn noise_rng(seed: u64, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * channel as u64 + 1);
    rng
}

/// Unit-variance Gaussian noise, one independent stream per row.
fn unit_noise(n_rows: usize, n_samples: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n_rows)
        .into_par_iter()
        .map(|ch| {
            let mut rng = noise_rng(seed, ch);
            (0..n_samples)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

fn total_power(rows: &[Vec<f64>]) -> f64 {
    let n: usize = rows.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    rows.iter()
        .map(|r| mean_power(r) * r.len() as f64)
        .sum::<f64>()
        / n as f64
}

/// Gaussian white noise scaled so that `10 log10(P_data / P_noise) = snr_db`
/// exactly over the whole matrix. Returns the noise alone.
pub fn white_noise_for(data: &[Vec<f64>], snr_db: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let n_samples = data.first().map_or(0, Vec::len);
    if snr_db == f64::INFINITY {
        return Ok(vec![vec![0.0; n_samples]; data.len()]);
    }
    if !snr_db.is_finite() {
        return Err(Error::param("snr_db", "must be finite or +inf"));
    }
    let p_signal = total_power(data);
    if p_signal <= 0.0 {
        return Err(Error::Undefined("SNR undefined for zero-power data".into()));
    }
    let mut noise = unit_noise(data.len(), n_samples, seed);
    let p_raw = total_power(&noise);
    let gain = (p_signal / 10f64.powf(snr_db / 10.0) / p_raw).sqrt();
    for row in &mut noise {
        for v in row.iter_mut() {
            *v *= gain;
        }
    }
    Ok(noise)
}

/// Returns `data + noise` at the requested SNR; deterministic per seed.
pub fn add_white_noise(data: &[Vec<f64>], snr_db: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let noise = white_noise_for(data, snr_db, seed)?;
    Ok(data
        .iter()
        .zip(&noise)
        .map(|(d, e)| d.iter().zip(e).map(|(a, b)| a + b).collect())
        .collect())
}

fn hann_burst(out: &mut [f64], fs: f64, w: &BurstWindow, amplitude: f64, phase: f64) {
    let i0 = (w.start_s * fs).ceil() as usize;
    let i1 = ((w.end_s * fs).floor() as usize).min(out.len().saturating_sub(1));
    let len = w.end_s - w.start_s;
    for (i, o) in out.iter_mut().enumerate().take(i1 + 1).skip(i0) {
        let t = i as f64 / fs;
        let win = 0.5 - 0.5 * (2.0 * PI * (t - w.start_s) / len).cos();
        *o += amplitude * win * (2.0 * PI * w.center_freq_hz * t + phase).sin();
    }
}

fn sustained(out: &mut [f64], fs: f64, w: &BurstWindow, amplitude: f64, phase: f64) {
    let i0 = (w.start_s * fs).ceil() as usize;
    for (i, o) in out.iter_mut().enumerate().skip(i0) {
        let t = i as f64 / fs;
        let dt = t - w.start_s;
        let env = if dt < ICTAL_RISE_S {
            0.5 - 0.5 * (PI * dt / ICTAL_RISE_S).cos()
        } else {
            1.0
        };
        *o += amplitude * env * (2.0 * PI * w.center_freq_hz * t + phase).sin();
    }
}

fn sample_bursts(rng: &mut ChaCha8Rng, spec: &SimulationSpec, until_s: f64) -> Vec<BurstWindow> {
    let mut out = Vec::new();
    if spec.burst_rate_hz <= 0.0 {
        return out;
    }
    let period = 1.0 / spec.burst_rate_hz;
    let mut t = rng.random_range(0.0..period);
    loop {
        let dur = rng.random_range(BURST_MIN_S..BURST_MAX_S);
        if t + dur > until_s {
            break;
        }
        let f = rng.random_range(spec.gamma_band.low_hz..spec.gamma_band.high_hz);
        out.push(BurstWindow {
            start_s: t,
            end_s: t + dur,
            center_freq_hz: f,
        });
        t += dur + rng.random_range(0.5 * period..1.5 * period);
    }
    out
}

fn draw_spike_params(rng: &mut ChaCha8Rng, spec: &SimulationSpec, time_s: f64) -> SpikeModelParams {
    let osc_rms = spec.burst_amplitude / SQRT_2;
    let amplitude = rng.random_range(3.0..8.0) * osc_rms;
    let half_width = rng.random_range(0.030..0.070);
    let asym = rng.random_range(-0.010..0.010);
    let polarity = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    SpikeModelParams::new(
        amplitude,
        time_s,
        SpikeModelParams::scale_for_half_width(half_width),
        asym,
    )
    .with_polarity(polarity)
}

fn place_spikes(rng: &mut ChaCha8Rng, spec: &SimulationSpec, bursts: &[BurstWindow]) -> Vec<f64> {
    let duration = spec.duration_s;
    let lo = SPIKE_EDGE_MARGIN_S;
    let hi = duration - SPIKE_EDGE_MARGIN_S;
    if spec.spike_rate_hz <= 0.0 || hi <= lo {
        return Vec::new();
    }
    let count = Poisson::new(spec.spike_rate_hz * duration)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    let inside: Vec<&BurstWindow> = bursts
        .iter()
        .filter(|w| w.end_s > lo && w.start_s < hi)
        .collect();
    let in_burst = |t: f64| bursts.iter().any(|w| t >= w.start_s && t <= w.end_s);
    let mut times: Vec<f64> = Vec::with_capacity(count);
    for _ in 0..count {
        let want_overlap = !inside.is_empty() && rng.random_bool(spec.overlap_fraction);
        for _attempt in 0..200 {
            let t = if want_overlap {
                let w = inside[rng.random_range(0..inside.len())];
                rng.random_range(w.start_s.max(lo)..w.end_s.min(hi))
            } else {
                rng.random_range(lo..hi)
            };
            if !want_overlap && in_burst(t) {
                continue;
            }
            if times.iter().all(|&s| (s - t).abs() >= SPIKE_MIN_GAP_S) {
                times.push(t);
                break;
            }
        }
    }
    times.sort_by(f64::total_cmp);
    times
}

fn synthesize_channel(spec: &SimulationSpec, ch: usize) -> ChannelEvents {
    let fs = spec.sample_rate_hz;
    let n = spec.n_samples();
    let mut rng = event_rng(spec.seed, ch);
    let is_seizure = ch == spec.seizure_channel && spec.ictal_onset_s < spec.duration_s;

    let until = if is_seizure {
        spec.ictal_onset_s
    } else {
        spec.duration_s
    };
    let mut bursts = sample_bursts(&mut rng, spec, until);
    let mut oscillation = vec![0.0; n];
    for w in &bursts {
        let phase = rng.random_range(0.0..2.0 * PI);
        hann_burst(&mut oscillation, fs, w, spec.burst_amplitude, phase);
    }
    if is_seizure {
        let w = BurstWindow {
            start_s: spec.ictal_onset_s,
            end_s: spec.duration_s,
            center_freq_hz: rng.random_range(spec.gamma_band.low_hz..spec.gamma_band.high_hz),
        };
        let phase = rng.random_range(0.0..2.0 * PI);
        sustained(&mut oscillation, fs, &w, spec.ictal_amplitude, phase);
        bursts.push(w);
    }

    let times = place_spikes(&mut rng, spec, &bursts);
    let mut spikes = vec![0.0; n];
    let mut injected = Vec::with_capacity(times.len());
    for t in times {
        let p = draw_spike_params(&mut rng, spec, t);
        let r = p.support_radius_s(1e-12);
        let i0 = ((t - r) * fs).floor().max(0.0) as usize;
        let i1 = (((t + r) * fs).ceil() as usize).min(n.saturating_sub(1));
        for (i, s) in spikes.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            *s += p.value(i as f64 / fs);
        }
        injected.push(InjectedSpike {
            time_s: t,
            params: p,
        });
    }
    ChannelEvents {
        spikes,
        oscillation,
        bursts,
        injected,
    }
}

/// Generates a recording and the components it was built from.
pub fn synthesize_recording(spec: &SimulationSpec) -> Result<(Recording, GroundTruth)> {
    spec.validate()?;
    let channels: Vec<ChannelEvents> = (0..spec.n_channels)
        .into_par_iter()
        .map(|ch| synthesize_channel(spec, ch))
        .collect();

    let mut spike_component = Vec::with_capacity(spec.n_channels);
    let mut oscillation_component = Vec::with_capacity(spec.n_channels);
    let mut burst_windows = Vec::with_capacity(spec.n_channels);
    let mut spikes = Vec::with_capacity(spec.n_channels);
    for c in channels {
        spike_component.push(c.spikes);
        oscillation_component.push(c.oscillation);
        burst_windows.push(c.bursts);
        spikes.push(c.injected);
    }

    let truth_clean: Vec<Vec<f64>> = spike_component
        .iter()
        .zip(&oscillation_component)
        .map(|(s, o)| s.iter().zip(o).map(|(a, b)| a + b).collect())
        .collect();
    let noise_component = white_noise_for(&truth_clean, spec.snr_db, spec.seed)?;
    let data: Vec<Vec<f64>> = truth_clean
        .iter()
        .zip(&noise_component)
        .map(|(c, e)| c.iter().zip(e).map(|(a, b)| a + b).collect())
        .collect();

    let rec = Recording::new(spec.sample_rate_hz, default_labels(spec.n_channels), data)?;
    let truth = GroundTruth {
        spike_component,
        oscillation_component,
        noise_component,
        burst_windows,
        spikes,
        ictal_onset_s: spec.ictal_onset_s,
        seizure_channel: spec.seizure_channel,
    };
    Ok((rec, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_and_exact_additivity() {
        let spec = SimulationSpec::default();
        let (rec, truth) = synthesize_recording(&spec).unwrap();
        assert_eq!(rec.n_channels(), 6);
        assert_eq!(rec.n_samples(), 20_000);
        for ch in 0..6 {
            for i in 0..rec.n_samples() {
                let sum = truth.spike_component[ch][i]
                    + truth.oscillation_component[ch][i]
                    + truth.noise_component[ch][i];
                assert_eq!(rec.channel(ch)[i], sum);
            }
        }
    }

    #[test]
    fn infinite_snr_disables_noise() {
        let spec = SimulationSpec {
            snr_db: f64::INFINITY,
            ..SimulationSpec::default()
        };
        let (_, truth) = synthesize_recording(&spec).unwrap();
        assert!(truth.noise_component.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn realized_snr_matches_request() {
        let spec = SimulationSpec {
            n_channels: 1,
            seizure_channel: 0,
            duration_s: 10.0,
            spike_rate_hz: 1.0,
            seed: 7,
            ..SimulationSpec::default()
        };
        let (_, truth) = synthesize_recording(&spec).unwrap();
        let p_clean = mean_power(&truth.clean()[0]);
        let p_noise = mean_power(&truth.noise_component[0]);
        let snr = 10.0 * (p_clean / p_noise).log10();
        assert!((snr - 5.0).abs() <= 0.1, "snr {snr}");
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SimulationSpec::default();
        let (a, ta) = synthesize_recording(&spec).unwrap();
        let (b, tb) = synthesize_recording(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = synthesize_recording(&SimulationSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ground_truth_windows_in_range() {
        let spec = SimulationSpec::default();
        let (_, truth) = synthesize_recording(&spec).unwrap();
        for w in truth.burst_windows.iter().flatten() {
            assert!(w.start_s >= 0.0 && w.end_s <= spec.duration_s);
            assert!(w.center_freq_hz < spec.sample_rate_hz / 2.0);
        }
        // the seizure channel carries the sustained window
        let last = truth.burst_windows[3].last().unwrap();
        assert_eq!(last.start_s, 10.0);
        assert_eq!(last.end_s, 20.0);
        for (ch, spikes) in truth.spikes.iter().enumerate() {
            assert!(!spikes.is_empty(), "channel {ch} has no spikes");
            for w in spikes.windows(2) {
                assert!(w[1].time_s - w[0].time_s >= SPIKE_MIN_GAP_S);
            }
        }
    }

    #[test]
    fn invalid_spec_names_field() {
        let bad = SimulationSpec {
            gamma_band: Band::new(65.0, 600.0),
            ..SimulationSpec::default()
        };
        match bad.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "gamma_band"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = SimulationSpec {
            n_channels: 0,
            ..SimulationSpec::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidParameter {
                field: "n_channels",
                ..
            })
        ));
    }

    #[test]
    fn noise_power_calibration() {
        let data = vec![(0..50_000)
            .map(|i| (i as f64 * 0.37).sin() * SQRT_2)
            .collect::<Vec<f64>>()];
        let p_sig = mean_power(&data[0]);
        let noise = white_noise_for(&data, 5.0, 11).unwrap();
        let ratio = mean_power(&noise[0]) / p_sig;
        assert!((ratio - 10f64.powf(-0.5)).abs() / 10f64.powf(-0.5) < 0.02);
        let noise0 = white_noise_for(&data, 0.0, 11).unwrap();
        assert!((mean_power(&noise0[0]) / p_sig - 1.0).abs() < 0.02);
        assert_eq!(
            add_white_noise(&data, 5.0, 3).unwrap(),
            add_white_noise(&data, 5.0, 3).unwrap()
        );
        assert!(matches!(
            add_white_noise(&[vec![0.0; 10]], 5.0, 1),
            Err(Error::Undefined(_))
        ));
    }
}
