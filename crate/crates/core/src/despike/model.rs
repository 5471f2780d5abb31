//! Biphasic Gaussian spike template.
//!
//! ```text
//!            ⎧ -A exp(-((t - a) + γ)² / b)   t < a
//! G(t)  =    ⎨  0                            t = a
//!            ⎩  A exp(-((t - a) - γ)² / b)   t > a
//! ```
//!
//! multiplied by a polarity of ±1.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeModelParams {
    /// `A`, signal units, > 0.
    pub amplitude: f64,
    /// `a`, center shift in seconds.
    pub shift_s: f64,
    /// `b`, scale in s², > 0.
    pub scale_s2: f64,
    /// `γ`, asymmetry in seconds.
    pub asymmetry_s: f64,
    /// +1 for negative-lobe-first, -1 for the mirrored waveform.
    pub polarity: f64,
}

impl SpikeModelParams {
    pub fn new(amplitude: f64, shift_s: f64, scale_s2: f64, asymmetry_s: f64) -> Self {
        SpikeModelParams {
            amplitude,
            shift_s,
            scale_s2,
            asymmetry_s,
            polarity: 1.0,
        }
    }

    pub fn with_polarity(mut self, polarity: f64) -> Self {
        self.polarity = polarity.signum();
        self
    }

    /// `b` from the half-amplitude half-width `w` of one lobe: `exp(-w²/b) = 1/2`.
    pub fn scale_for_half_width(half_width_s: f64) -> f64 {
        half_width_s * half_width_s / std::f64::consts::LN_2
    }

    pub fn half_width_s(&self) -> f64 {
        (self.scale_s2 * std::f64::consts::LN_2).sqrt()
    }

    pub fn is_valid(&self) -> bool {
        self.amplitude > 0.0
            && self.scale_s2 > 0.0
            && self.amplitude.is_finite()
            && self.shift_s.is_finite()
            && self.scale_s2.is_finite()
            && self.asymmetry_s.is_finite()
            && (self.polarity == 1.0 || self.polarity == -1.0)
    }

    /// Model value at time `t`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let u = t - self.shift_s;
        let g = if u < 0.0 {
            let d = u + self.asymmetry_s;
            -self.amplitude * (-(d * d) / self.scale_s2).exp()
        } else if u > 0.0 {
            let d = u - self.asymmetry_s;
            self.amplitude * (-(d * d) / self.scale_s2).exp()
        } else {
            0.0
        };
        self.polarity * g
    }

    /// Value and partial derivatives with respect to `(A, a, b, γ)`.
    #[inline]
    pub(crate) fn value_and_gradient(&self, t: f64) -> (f64, [f64; 4]) {
        let u = t - self.shift_s;
        let b = self.scale_s2;
        if u == 0.0 {
            return (0.0, [0.0; 4]);
        }
        // lobe: sgn * A * exp(-d²/b) with d = u + γ (left) or u - γ (right)
        let (sgn, d, dgamma) = if u < 0.0 {
            (-1.0, u + self.asymmetry_s, 1.0)
        } else {
            (1.0, u - self.asymmetry_s, -1.0)
        };
        let e = (-(d * d) / b).exp();
        let g = self.polarity * sgn * self.amplitude * e;
        let dd = -2.0 * d / b * g; // dG/dd
        let grad = [
            self.polarity * sgn * e,
            -dd,
            g * d * d / (b * b),
            dd * dgamma,
        ];
        (g, grad)
    }

    /// Radius around `a` beyond which both lobes fall below `rel_tol * A`.
    pub fn support_radius_s(&self, rel_tol: f64) -> f64 {
        self.asymmetry_s.abs() + (self.scale_s2 * (1.0 / rel_tol).ln()).sqrt()
    }
}

/// Evaluates the template at each time in `times`.
pub fn evaluate_spike_model(params: &SpikeModelParams, times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| params.value(t)).collect()
}
