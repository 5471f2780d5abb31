//! Multichannel recordings and frequency bands.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_band, Error, Result};

/// A uniformly sampled multichannel time series, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    sample_rate_hz: f64,
    labels: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(sample_rate_hz: f64, labels: Vec<String>, data: Vec<Vec<f64>>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::param(
                "sample_rate_hz",
                format!("must be > 0, got {sample_rate_hz}"),
            ));
        }
        if data.is_empty() {
            return Err(Error::param("data", "at least one channel required"));
        }
        if labels.len() != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} channels",
                labels.len(),
                data.len()
            )));
        }
        let n = data[0].len();
        if n == 0 {
            return Err(Error::param("data", "at least one sample required"));
        }
        for (ch, row) in data.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "channel {ch} has {} samples, expected {n}",
                    row.len()
                )));
            }
            if let Some(i) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::param(
                    "data",
                    format!("non-finite sample at channel {ch}, index {i}"),
                ));
            }
        }
        Ok(Recording {
            sample_rate_hz,
            labels,
            data,
        })
    }

    /// Labels `ch1`, `ch2`, ...
    pub fn with_default_labels(sample_rate_hz: f64, data: Vec<Vec<f64>>) -> Result<Self> {
        let labels = default_labels(data.len());
        Recording::new(sample_rate_hz, labels, data)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Vec<f64>> {
        self.data
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.data[idx]
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Same rate and labels, new data. The new data must keep the shape.
    pub fn with_data(&self, data: Vec<Vec<f64>>) -> Result<Self> {
        if data.len() != self.n_channels() || data.iter().any(|r| r.len() != self.n_samples()) {
            return Err(Error::ShapeMismatch(
                "replacement data must keep the recording shape".into(),
            ));
        }
        Recording::new(self.sample_rate_hz, self.labels.clone(), data)
    }

    /// Applies `f` to every channel in parallel, keeping rate and labels.
    pub fn try_map_channels<F>(&self, f: F) -> Result<Recording>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let data = self
            .data
            .par_iter()
            .map(|row| f(row))
            .collect::<Result<Vec<_>>>()?;
        self.with_data(data)
    }

    pub fn zeros_like(&self) -> Recording {
        Recording {
            sample_rate_hz: self.sample_rate_hz,
            labels: self.labels.clone(),
            data: vec![vec![0.0; self.n_samples()]; self.n_channels()],
        }
    }
}

pub fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("ch{i}")).collect()
}

/// A frequency band `[low_hz, high_hz]`, written `low:high` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub const fn new(low_hz: f64, high_hz: f64) -> Self {
        Band { low_hz, high_hz }
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        check_band(self.low_hz, self.high_hz, sample_rate_hz)
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low_hz && f <= self.high_hz
    }

    /// Analysis frequencies in 1 Hz steps from `low_hz` up to `high_hz` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut f = self.low_hz;
        while f <= self.high_hz + 1e-9 {
            out.push(f);
            f += 1.0;
        }
        out
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.low_hz, self.high_hz)
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::param("band", format!("expected LOW:HIGH, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::param("band", format!("not a number: `{v}`")))
        };
        let band = Band::new(parse(lo)?, parse(hi)?);
        if !(band.low_hz > 0.0 && band.low_hz < band.high_hz) {
            return Err(Error::param(
                "band",
                format!("need 0 < low < high, got `{s}`"),
            ));
        }
        Ok(band)
    }
}
