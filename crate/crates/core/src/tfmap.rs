//! Complex Morlet time-frequency power maps.
//!
//! At analysis frequency `f` the wavelet is `exp(2πi f t) · exp(-t² / 2σ²)`
//! with `σ = omega / (2π f)`, sampled on `±5σ`. The signal is reflected at
//! both ends and convolved with each wavelet through one shared FFT.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{median, reflect_index};

/// Wavelets are truncated at this many temporal standard deviations.
pub const SUPPORT_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// A real sinusoid of amplitude `A` at the analysis frequency yields `|coef| = A`.
    Amplitude,
    /// Unit ℓ2 norm.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorletSpec {
    pub omega: f64,
    pub freqs_hz: Vec<f64>,
    pub normalize: Normalization,
}

impl MorletSpec {
    pub fn new(omega: f64, freqs_hz: Vec<f64>) -> Self {
        MorletSpec {
            omega,
            freqs_hz,
            normalize: Normalization::Amplitude,
        }
    }

    /// `fmin..=fmax` in steps of `fstep`.
    pub fn linear(omega: f64, fmin: f64, fmax: f64, fstep: f64) -> Result<Self> {
        if !(fstep > 0.0 && fmin > 0.0 && fmax >= fmin) {
            return Err(Error::param(
                "freqs_hz",
                format!("bad grid {fmin}..{fmax} step {fstep}"),
            ));
        }
        let count = ((fmax - fmin) / fstep + 1e-9).floor() as usize + 1;
        Ok(MorletSpec::new(
            omega,
            (0..count).map(|i| fmin + i as f64 * fstep).collect(),
        ))
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= 1.0) {
            return Err(Error::param(
                "omega",
                format!("must be >= 1, got {}", self.omega),
            ));
        }
        if self.freqs_hz.is_empty() {
            return Err(Error::param("freqs_hz", "empty frequency list"));
        }
        for (i, &f) in self.freqs_hz.iter().enumerate() {
            if !(f > 0.0 && f < sample_rate_hz / 2.0) {
                return Err(Error::param(
                    "freqs_hz",
                    format!("{f} Hz outside (0, {}) Hz", sample_rate_hz / 2.0),
                ));
            }
            if i > 0 && f <= self.freqs_hz[i - 1] {
                return Err(Error::param(
                    "freqs_hz",
                    "frequencies must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    pub fn sigma_t(&self, f: f64) -> f64 {
        self.omega / (2.0 * PI * f)
    }

    /// Half-length in samples of the wavelet at `f`.
    pub fn half_support(&self, f: f64, sample_rate_hz: f64) -> usize {
        (SUPPORT_SIGMAS * self.sigma_t(f) * sample_rate_hz).ceil() as usize
    }

    /// Sampled wavelet at `f`, index `k + half` holding lag `k`.
    pub fn kernel(&self, f: f64, sample_rate_hz: f64) -> Vec<Complex<f64>> {
        let half = self.half_support(f, sample_rate_hz) as isize;
        let sigma = self.sigma_t(f);
        let mut w: Vec<Complex<f64>> = (-half..=half)
            .map(|k| {
                let t = k as f64 / sample_rate_hz;
                let env = (-t * t / (2.0 * sigma * sigma)).exp();
                Complex::from_polar(env, 2.0 * PI * f * t)
            })
            .collect();
        let scale = match self.normalize {
            Normalization::Amplitude => 2.0 / w.iter().map(|c| c.norm()).sum::<f64>(),
            Normalization::Energy => 1.0 / w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
        };
        for c in &mut w {
            *c *= scale;
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeFrequencyMap {
    pub freqs_hz: Vec<f64>,
    pub times_s: Vec<f64>,
    /// `power[f][t]`, squared coefficient magnitude.
    pub power: Vec<Vec<f64>>,
    pub channel_label: String,
}

impl TimeFrequencyMap {
    /// Σ over frequencies at each time.
    pub fn column_power(&self) -> Vec<f64> {
        let mut col = vec![0.0; self.times_s.len()];
        for row in &self.power {
            for (c, p) in col.iter_mut().zip(row) {
                *c += p;
            }
        }
        col
    }

    /// Time-average of each frequency row.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        self.power
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len().max(1) as f64)
            .collect()
    }

    /// Frequency of the largest time-averaged power.
    pub fn ridge_hz(&self) -> f64 {
        let spec = self.mean_spectrum();
        let i = spec
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        self.freqs_hz[i]
    }
}

/// Complex coefficients `coef[f][t]` for every analysis frequency.
pub fn morlet_coefficients(
    signal: &[f64],
    sample_rate_hz: f64,
    spec: &MorletSpec,
) -> Result<Vec<Vec<Complex<f64>>>> {
    spec.validate(sample_rate_hz)?;
    let n = signal.len();
    let pad = spec
        .freqs_hz
        .iter()
        .map(|&f| spec.half_support(f, sample_rate_hz))
        .max()
        .unwrap_or(0);
    if n < 2 * pad + 1 {
        return Err(Error::TooShort(format!(
            "{n} samples shorter than the {}-sample wavelet at {} Hz",
            2 * pad + 1,
            spec.freqs_hz[0]
        )));
    }
    let padded_len = n + 2 * pad;
    let fft_len = (padded_len + 2 * pad).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);

    let mut spectrum: Vec<Complex<f64>> = (0..fft_len)
        .map(|j| {
            if j < padded_len {
                Complex::new(signal[reflect_index(j as isize - pad as isize, n)], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    forward.process(&mut spectrum);

    let norm = 1.0 / fft_len as f64;
    let rows = spec
        .freqs_hz
        .par_iter()
        .map(|&f| {
            let kernel = spec.kernel(f, sample_rate_hz);
            let half = kernel.len() / 2;
            let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
            buf[..kernel.len()].copy_from_slice(&kernel);
            forward.process(&mut buf);
            for (b, s) in buf.iter_mut().zip(&spectrum) {
                *b *= s;
            }
            inverse.process(&mut buf);
            // full convolution index of output sample i is i + pad + half
            (0..n)
                .map(|i| buf[i + pad + half] * norm)
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(rows)
}

pub fn wavelet_transform(
    signal: &[f64],
    sample_rate_hz: f64,
    spec: &MorletSpec,
) -> Result<TimeFrequencyMap> {
    let coefs = morlet_coefficients(signal, sample_rate_hz, spec)?;
    Ok(TimeFrequencyMap {
        freqs_hz: spec.freqs_hz.clone(),
        times_s: (0..signal.len())
            .map(|i| i as f64 / sample_rate_hz)
            .collect(),
        power: coefs
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.norm_sqr()).collect())
            .collect(),
        channel_label: String::new(),
    })
}

/// Half-width of the broadband column scored around an event.
pub const SIGNATURE_HALF_WINDOW_S: f64 = 0.050;

/// Mean broadband column power within ±50 ms of `event_time_s`, relative to
/// the map's median column power (or its mean column power when the median
/// is zero). An all-zero map scores 0.
pub fn spike_signature_score(map: &TimeFrequencyMap, event_time_s: f64) -> Result<f64> {
    let times = &map.times_s;
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Err(Error::param("map", "empty time axis"));
    };
    if !(event_time_s >= t0 && event_time_s <= t1) {
        return Err(Error::param(
            "event_time_s",
            format!("{event_time_s} s outside [{t0}, {t1}] s"),
        ));
    }
    let col = map.column_power();
    let inside: Vec<f64> = times
        .iter()
        .zip(&col)
        .filter(|(t, _)| (**t - event_time_s).abs() <= SIGNATURE_HALF_WINDOW_S)
        .map(|(_, c)| *c)
        .collect();
    let window_mean = inside.iter().sum::<f64>() / inside.len().max(1) as f64;
    let med = median(&col).unwrap_or(0.0);
    let reference = if med > 0.0 {
        med
    } else {
        col.iter().sum::<f64>() / col.len() as f64
    };
    Ok(if reference > 0.0 {
        window_mean / reference
    } else {
        0.0
    })
}
