use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("frequency band {low_hz}:{high_hz} Hz invalid for sample rate {sample_rate_hz} Hz (need 0 < low < high < Nyquist)")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate_hz: f64,
    },

    #[error("unsupported wavelet `{0}` (expected sym2..sym8)")]
    UnsupportedWavelet(String),

    #[error("{levels} decomposition levels too deep for signal of length {len} (max {max})")]
    LevelsTooDeep {
        levels: usize,
        len: usize,
        max: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("signal too short: {0}")]
    TooShort(String),

    #[error("{path}:{line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Undefined(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used as the prefix of CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "E_PARAM",
            Error::InvalidBand { .. } => "E_BAND",
            Error::UnsupportedWavelet(_) => "E_WAVELET",
            Error::LevelsTooDeep { .. } => "E_LEVELS",
            Error::ShapeMismatch(_) => "E_SHAPE",
            Error::TooShort(_) => "E_SHORT",
            Error::Format { .. } => "E_FORMAT",
            Error::Config(_) => "E_CONFIG",
            Error::Undefined(_) => "E_UNDEFINED",
            Error::Io { .. } => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }

    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Rejects a band unless `0 < low < high < sample_rate / 2`.
pub fn check_band(low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Result<()> {
    let ok = low_hz.is_finite()
        && high_hz.is_finite()
        && low_hz > 0.0
        && low_hz < high_hz
        && high_hz < sample_rate_hz / 2.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidBand {
            low_hz,
            high_hz,
            sample_rate_hz,
        })
    }
}
