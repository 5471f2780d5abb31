//! Every tunable of the pipelines in one flat `key = value` file.
//!
//! ```text
//! # comment
//! wavelet = sym5
//! levels = 6
//! mask = auto:0.5
//! gamma_band = 65:85
//! ```
//!
//! Unknown keys are rejected and every value is validated on load. Explicit
//! overrides (CLI flags) win over the file, which wins over the defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::despike::{DespikeConfig, DetectConfig, FitBounds, FitOptions};
use crate::error::{Error, Result};
use crate::recording::Band;
use crate::stmap::StmapConfig;
use crate::swt::{LevelMask, MaskSpec, Wavelet};
use crate::tfmap::MorletSpec;

/// How the SWT planes are masked before reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaskMode {
    /// `auto:<fraction>`
    Auto(f64),
    /// `keep`
    KeepAll,
    /// `zero`
    ZeroAll,
}

impl MaskMode {
    pub fn to_spec(self, levels: usize) -> MaskSpec {
        match self {
            MaskMode::Auto(f) => MaskSpec::auto(levels, f),
            MaskMode::KeepAll => MaskSpec::keep_all(levels),
            MaskMode::ZeroAll => MaskSpec::uniform(LevelMask::ZeroAll, levels, 0.0),
        }
    }
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskMode::Auto(x) => write!(f, "auto:{x}"),
            MaskMode::KeepAll => f.write_str("keep"),
            MaskMode::ZeroAll => f.write_str("zero"),
        }
    }
}

impl FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "keep" => return Ok(MaskMode::KeepAll),
            "zero" => return Ok(MaskMode::ZeroAll),
            "auto" => return Ok(MaskMode::Auto(0.5)),
            _ => {}
        }
        let frac = s
            .strip_prefix("auto:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| {
                Error::param(
                    "mask",
                    format!("expected auto[:FRACTION], keep or zero, got `{s}`"),
                )
            })?;
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::param(
                "mask",
                format!("threshold fraction {frac} outside [0, 1]"),
            ));
        }
        Ok(MaskMode::Auto(frac))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub wavelet: String,
    pub levels: usize,
    pub mask: MaskMode,
    /// Band the SWT and despike outputs are band-passed to.
    pub band: Band,
    pub detect_k: f64,
    pub min_separation_ms: f64,
    pub emphasis_ms: f64,
    pub window_ms: f64,
    pub fit_max_iterations: usize,
    pub fit_rel_tolerance: f64,
    pub fit_scale_min_s2: f64,
    pub fit_scale_max_s2: f64,
    pub fit_asymmetry_max_s: f64,
    pub fit_asymmetry_ratio_max: f64,
    pub fit_amplitude_factor: f64,
    pub tf_omega: f64,
    pub tf_fmin: f64,
    pub tf_fmax: f64,
    pub tf_fstep: f64,
    pub st_omega: f64,
    pub gamma_band: Band,
    pub norm_band: Band,
    pub smooth_ms: f64,
    pub k_sigma: f64,
    pub min_duration_ms: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DespikeConfig::default();
        let st = StmapConfig::default();
        RunConfig {
            wavelet: "sym5".into(),
            levels: 6,
            mask: MaskMode::Auto(0.5),
            band: Band::new(65.0, 85.0),
            detect_k: d.detect.k,
            min_separation_ms: d.detect.min_separation_s * 1e3,
            emphasis_ms: d.detect.emphasis_s * 1e3,
            window_ms: d.window_half_s * 1e3,
            fit_max_iterations: d.fit.max_iterations,
            fit_rel_tolerance: d.fit.rel_tolerance,
            fit_scale_min_s2: d.bounds.scale_min_s2,
            fit_scale_max_s2: d.bounds.scale_max_s2,
            fit_asymmetry_max_s: d.bounds.asymmetry_max_s,
            fit_asymmetry_ratio_max: d.bounds.asymmetry_ratio_max,
            fit_amplitude_factor: d.bounds.amplitude_factor,
            tf_omega: 7.0,
            tf_fmin: 1.0,
            tf_fmax: 120.0,
            tf_fstep: 1.0,
            st_omega: st.omega,
            gamma_band: st.gamma_band,
            norm_band: st.norm_band,
            smooth_ms: st.smooth_ms,
            k_sigma: st.k_sigma,
            min_duration_ms: st.min_duration_ms,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_band(key: &str, value: &str) -> Result<Band> {
    value
        .parse::<Band>()
        .map_err(|e| Error::Config(format!("{key}: {e}")))
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "wavelet",
        "levels",
        "mask",
        "band",
        "detect_k",
        "min_separation_ms",
        "emphasis_ms",
        "window_ms",
        "fit_max_iterations",
        "fit_rel_tolerance",
        "fit_scale_min_s2",
        "fit_scale_max_s2",
        "fit_asymmetry_max_s",
        "fit_asymmetry_ratio_max",
        "fit_amplitude_factor",
        "tf_omega",
        "tf_fmin",
        "tf_fmax",
        "tf_fstep",
        "st_omega",
        "gamma_band",
        "norm_band",
        "smooth_ms",
        "k_sigma",
        "min_duration_ms",
    ];

    /// Sets one key from its text form without validating the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "wavelet" => self.wavelet = v.to_string(),
            "levels" => self.levels = parse_num(key, v)?,
            "mask" => {
                self.mask = v
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "band" => self.band = parse_band(key, v)?,
            "detect_k" => self.detect_k = parse_num(key, v)?,
            "min_separation_ms" => self.min_separation_ms = parse_num(key, v)?,
            "emphasis_ms" => self.emphasis_ms = parse_num(key, v)?,
            "window_ms" => self.window_ms = parse_num(key, v)?,
            "fit_max_iterations" => self.fit_max_iterations = parse_num(key, v)?,
            "fit_rel_tolerance" => self.fit_rel_tolerance = parse_num(key, v)?,
            "fit_scale_min_s2" => self.fit_scale_min_s2 = parse_num(key, v)?,
            "fit_scale_max_s2" => self.fit_scale_max_s2 = parse_num(key, v)?,
            "fit_asymmetry_max_s" => self.fit_asymmetry_max_s = parse_num(key, v)?,
            "fit_asymmetry_ratio_max" => self.fit_asymmetry_ratio_max = parse_num(key, v)?,
            "fit_amplitude_factor" => self.fit_amplitude_factor = parse_num(key, v)?,
            "tf_omega" => self.tf_omega = parse_num(key, v)?,
            "tf_fmin" => self.tf_fmin = parse_num(key, v)?,
            "tf_fmax" => self.tf_fmax = parse_num(key, v)?,
            "tf_fstep" => self.tf_fstep = parse_num(key, v)?,
            "st_omega" => self.st_omega = parse_num(key, v)?,
            "gamma_band" => self.gamma_band = parse_band(key, v)?,
            "norm_band" => self.norm_band = parse_band(key, v)?,
            "smooth_ms" => self.smooth_ms = parse_num(key, v)?,
            "k_sigma" => self.k_sigma = parse_num(key, v)?,
            "min_duration_ms" => self.min_duration_ms = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Text form of one key, as written by [`RunConfig::to_text`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "wavelet" => self.wavelet.clone(),
            "levels" => self.levels.to_string(),
            "mask" => self.mask.to_string(),
            "band" => self.band.to_string(),
            "detect_k" => self.detect_k.to_string(),
            "min_separation_ms" => self.min_separation_ms.to_string(),
            "emphasis_ms" => self.emphasis_ms.to_string(),
            "window_ms" => self.window_ms.to_string(),
            "fit_max_iterations" => self.fit_max_iterations.to_string(),
            "fit_rel_tolerance" => self.fit_rel_tolerance.to_string(),
            "fit_scale_min_s2" => self.fit_scale_min_s2.to_string(),
            "fit_scale_max_s2" => self.fit_scale_max_s2.to_string(),
            "fit_asymmetry_max_s" => self.fit_asymmetry_max_s.to_string(),
            "fit_asymmetry_ratio_max" => self.fit_asymmetry_ratio_max.to_string(),
            "fit_amplitude_factor" => self.fit_amplitude_factor.to_string(),
            "tf_omega" => self.tf_omega.to_string(),
            "tf_fmin" => self.tf_fmin.to_string(),
            "tf_fmax" => self.tf_fmax.to_string(),
            "tf_fstep" => self.tf_fstep.to_string(),
            "st_omega" => self.st_omega.to_string(),
            "gamma_band" => self.gamma_band.to_string(),
            "norm_band" => self.norm_band.to_string(),
            "smooth_ms" => self.smooth_ms.to_string(),
            "k_sigma" => self.k_sigma.to_string(),
            "min_duration_ms" => self.min_duration_ms.to_string(),
            _ => return None,
        })
    }

    /// Checks every value against the preconditions of the module that uses
    /// it. Band limits against Nyquist are checked later, once the sample
    /// rate is known.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        self.wavelet()?;
        if self.levels == 0 {
            return bad("levels", "must be >= 1");
        }
        if !pos(self.detect_k) {
            return bad("detect_k", "must be > 0");
        }
        if !nonneg(self.min_separation_ms) {
            return bad("min_separation_ms", "must be >= 0");
        }
        if !pos(self.emphasis_ms) {
            return bad("emphasis_ms", "must be > 0");
        }
        if !pos(self.window_ms) {
            return bad("window_ms", "must be > 0");
        }
        if self.fit_max_iterations == 0 {
            return bad("fit_max_iterations", "must be >= 1");
        }
        if !pos(self.fit_rel_tolerance) {
            return bad("fit_rel_tolerance", "must be > 0");
        }
        if !(pos(self.fit_scale_min_s2)
            && self.fit_scale_max_s2.is_finite()
            && self.fit_scale_max_s2 >= self.fit_scale_min_s2)
        {
            return bad(
                "fit_scale_max_s2",
                "need 0 < fit_scale_min_s2 <= fit_scale_max_s2",
            );
        }
        if !nonneg(self.fit_asymmetry_max_s) {
            return bad("fit_asymmetry_max_s", "must be >= 0");
        }
        if !pos(self.fit_asymmetry_ratio_max) {
            return bad("fit_asymmetry_ratio_max", "must be > 0");
        }
        if !pos(self.fit_amplitude_factor) {
            return bad("fit_amplitude_factor", "must be > 0");
        }
        self.tf_spec()?;
        if !pos(self.st_omega) {
            return bad("st_omega", "must be > 0");
        }
        if !nonneg(self.smooth_ms) {
            return bad("smooth_ms", "must be >= 0");
        }
        if !self.k_sigma.is_finite() {
            return bad("k_sigma", "must be finite");
        }
        if !nonneg(self.min_duration_ms) {
            return bad("min_duration_ms", "must be >= 0");
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// File values over defaults, then `overrides` over both.
    pub fn resolve(file: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        RunConfig::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn wavelet(&self) -> Result<Wavelet> {
        self.wavelet.parse()
    }

    pub fn mask_spec(&self) -> MaskSpec {
        self.mask.to_spec(self.levels)
    }

    pub fn despike_config(&self) -> DespikeConfig {
        DespikeConfig {
            detect: DetectConfig {
                k: self.detect_k,
                min_separation_s: self.min_separation_ms / 1e3,
                emphasis_s: self.emphasis_ms / 1e3,
            },
            window_half_s: self.window_ms / 1e3,
            bounds: FitBounds {
                scale_min_s2: self.fit_scale_min_s2,
                scale_max_s2: self.fit_scale_max_s2,
                asymmetry_max_s: self.fit_asymmetry_max_s,
                asymmetry_ratio_max: self.fit_asymmetry_ratio_max,
                amplitude_factor: self.fit_amplitude_factor,
            },
            fit: FitOptions {
                max_iterations: self.fit_max_iterations,
                rel_tolerance: self.fit_rel_tolerance,
                ..FitOptions::default()
            },
        }
    }

    pub fn tf_spec(&self) -> Result<MorletSpec> {
        MorletSpec::linear(self.tf_omega, self.tf_fmin, self.tf_fmax, self.tf_fstep)
            .map_err(|e| Error::Config(format!("tf_*: {e}")))
    }

    pub fn stmap_config(&self) -> StmapConfig {
        StmapConfig {
            gamma_band: self.gamma_band,
            norm_band: self.norm_band,
            omega: self.st_omega,
            smooth_ms: self.smooth_ms,
            k_sigma: self.k_sigma,
            min_duration_ms: self.min_duration_ms,
        }
    }
}

/// Drops an already-present `config: ` prefix when re-wrapping.
fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
