//! Nonlinear least-squares fitting of one or more spike templates.
//!
//! Levenberg-Marquardt (Gauss-Newton with adaptive diagonal damping) on
//! `(A, a, b, γ)` per template, with box constraints enforced by projection.
//! Before iterating, each template's shift and polarity are re-seeded by an
//! exhaustive scan over inter-sample positions with closed-form amplitude,
//! which keeps the fit in basin when the initial shift is off by more than a
//! lobe width.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SpikeModelParams;
use crate::error::{Error, Result};

pub const MIN_WINDOW_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub scale_min_s2: f64,
    pub scale_max_s2: f64,
    pub asymmetry_max_s: f64,
    /// Bound on `|γ| / √b`, which keeps the lobes from sliding off the
    /// center into a cusp.
    pub asymmetry_ratio_max: f64,
    /// Upper bound on `A` as a multiple of the window's peak |x|.
    pub amplitude_factor: f64,
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            scale_min_s2: 1e-6,
            scale_max_s2: 1.0,
            asymmetry_max_s: 0.1,
            asymmetry_ratio_max: 0.5,
            amplitude_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub rel_tolerance: f64,
    /// Re-seed shift and polarity by scanning before iterating.
    pub scan_shift: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            rel_tolerance: 1e-8,
            scan_shift: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    MaxIterations,
    /// The cost became non-finite; the initial parameters were returned.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: Vec<SpikeModelParams>,
    pub residual_rms: f64,
    pub initial_rms: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

struct Window<'a> {
    x: &'a [f64],
    t: Vec<f64>,
    peak: f64,
}

impl<'a> Window<'a> {
    fn new(signal: &'a [f64], sample_rate_hz: f64, window: (f64, f64)) -> Result<Self> {
        let n = signal.len();
        let i0 = ((window.0 * sample_rate_hz).round().max(0.0) as usize).min(n);
        let i1 = ((window.1 * sample_rate_hz).round().max(0.0) as usize).min(n);
        if i1 <= i0 || i1 - i0 < MIN_WINDOW_SAMPLES {
            return Err(Error::TooShort(format!(
                "fit window [{}, {}) s holds {} samples, need {MIN_WINDOW_SAMPLES}",
                window.0,
                window.1,
                i1.saturating_sub(i0)
            )));
        }
        let x = &signal[i0..i1];
        let t = (i0..i1).map(|i| i as f64 / sample_rate_hz).collect();
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Window { x, t, peak })
    }

    fn bounds_a(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    fn model(&self, params: &[SpikeModelParams]) -> Vec<f64> {
        self.t
            .iter()
            .map(|&t| params.iter().map(|p| p.value(t)).sum())
            .collect()
    }

    fn cost(&self, params: &[SpikeModelParams]) -> f64 {
        self.t
            .iter()
            .zip(self.x)
            .map(|(&t, &x)| {
                let r = x - params.iter().map(|p| p.value(t)).sum::<f64>();
                r * r
            })
            .sum()
    }
}

fn clamp_params(p: &mut SpikeModelParams, bounds: &FitBounds, a_range: (f64, f64), amp_max: f64) {
    let amp_min = (amp_max * 1e-12).max(f64::MIN_POSITIVE);
    p.amplitude = p.amplitude.clamp(amp_min, amp_max.max(amp_min));
    p.shift_s = p.shift_s.clamp(a_range.0, a_range.1);
    p.scale_s2 = p.scale_s2.clamp(bounds.scale_min_s2, bounds.scale_max_s2);
    let gmax = bounds
        .asymmetry_max_s
        .min(bounds.asymmetry_ratio_max * p.scale_s2.sqrt());
    p.asymmetry_s = p.asymmetry_s.clamp(-gmax, gmax);
}

/// Scans inter-sample shift positions for template `idx`, holding the others,
/// with amplitude and polarity set by least squares. Returns the best shift if
/// it beats the current cost.
fn scan_shift(win: &Window, params: &mut [SpikeModelParams], idx: usize, amp_max: f64) {
    let others: Vec<f64> = win
        .t
        .iter()
        .map(|&t| {
            params
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != idx)
                .map(|(_, p)| p.value(t))
                .sum()
        })
        .collect();
    let resid: Vec<f64> = win.x.iter().zip(&others).map(|(x, o)| x - o).collect();
    let current = {
        let p = &params[idx];
        win.t
            .iter()
            .zip(&resid)
            .map(|(&t, &r)| (r - p.value(t)).powi(2))
            .sum::<f64>()
    };
    let base = params[idx];
    let rr: f64 = resid.iter().map(|r| r * r).sum();
    let dt = if win.t.len() > 1 {
        win.t[1] - win.t[0]
    } else {
        1.0
    };
    let mut best: Option<(f64, f64, f64)> = None; // (cost, shift, signed amplitude)
    for k in 0..win.t.len() - 1 {
        let a = win.t[k] + 0.5 * dt;
        let shape = SpikeModelParams {
            amplitude: 1.0,
            shift_s: a,
            polarity: 1.0,
            ..base
        };
        let radius = shape.support_radius_s(1e-9);
        let (mut xg, mut gg) = (0.0, 0.0);
        for (&t, &r) in win.t.iter().zip(&resid) {
            if (t - a).abs() > radius {
                continue;
            }
            let g = shape.value(t);
            xg += r * g;
            gg += g * g;
        }
        if gg <= 0.0 {
            continue;
        }
        let amp = xg / gg;
        if amp.abs() > amp_max || amp == 0.0 {
            continue;
        }
        let cost = rr - xg * xg / gg;
        if best.is_none_or(|(c, _, _)| cost < c) {
            best = Some((cost, a, amp));
        }
    }
    if let Some((cost, a, amp)) = best {
        if cost < current {
            let p = &mut params[idx];
            p.shift_s = a;
            p.amplitude = amp.abs();
            p.polarity = amp.signum();
        }
    }
}

/// Jointly fits `init.len()` templates to `signal` inside `window` (seconds).
pub fn fit_templates(
    signal: &[f64],
    sample_rate_hz: f64,
    window: (f64, f64),
    init: &[SpikeModelParams],
    bounds: &FitBounds,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    let win = Window::new(signal, sample_rate_hz, window)?;
    if init.is_empty() {
        return Err(Error::param("init", "at least one template required"));
    }
    if let Some(p) = init.iter().find(|p| !p.is_valid()) {
        return Err(Error::param(
            "init",
            format!("invalid template parameters {p:?}"),
        ));
    }
    let m = win.x.len();
    let rms = |cost: f64| (cost / m as f64).sqrt();
    let initial_cost = win.cost(init);
    let a_range = win.bounds_a();
    let amp_max = bounds.amplitude_factor * win.peak;

    let mut params = init.to_vec();
    if amp_max <= 0.0 {
        // all-zero window: the amplitude lower bound is the solution
        for p in &mut params {
            clamp_params(p, bounds, a_range, 0.0);
        }
        let cost = win.cost(&params);
        return Ok(FitOutcome {
            residual_rms: rms(cost),
            params,
            initial_rms: rms(initial_cost),
            iterations: 0,
            status: FitStatus::Converged,
        });
    }
    for p in &mut params {
        clamp_params(p, bounds, a_range, amp_max);
    }
    if opts.scan_shift {
        for i in 0..params.len() {
            scan_shift(&win, &mut params, i, amp_max);
        }
    }
    let mut cost = win.cost(&params);
    if !cost.is_finite() || !initial_cost.is_finite() {
        return Ok(non_finite(init, initial_cost, m));
    }
    // keep the starting point if projection made it worse
    if cost > initial_cost && init.iter().all(|p| p.is_valid()) {
        let mut clamped = init.to_vec();
        for p in &mut clamped {
            clamp_params(p, bounds, a_range, amp_max);
        }
        let c = win.cost(&clamped);
        if c <= cost {
            params = clamped;
            cost = c;
        }
    }

    let np = 4 * params.len();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut status = FitStatus::MaxIterations;
    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            status = FitStatus::Converged;
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(m, np);
        let mut resid = DVector::<f64>::zeros(m);
        for (row, (&t, &x)) in win.t.iter().zip(win.x).enumerate() {
            let mut model = 0.0;
            for (k, p) in params.iter().enumerate() {
                let (g, grad) = p.value_and_gradient(t);
                model += g;
                for (c, d) in grad.iter().enumerate() {
                    jac[(row, 4 * k + c)] = *d;
                }
            }
            resid[row] = x - model;
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &resid;
        let diag_max = (0..np).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        if diag_max <= 0.0 {
            status = FitStatus::Converged;
            break;
        }
        loop {
            let mut lhs = jtj.clone();
            for i in 0..np {
                let d = jtj[(i, i)].max(1e-12 * diag_max);
                lhs[(i, i)] += lambda * d;
            }
            let Some(step) = lhs.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    status = FitStatus::Converged;
                    break 'outer;
                }
                continue;
            };
            let mut trial = params.clone();
            for (k, p) in trial.iter_mut().enumerate() {
                p.amplitude += step[4 * k];
                p.shift_s += step[4 * k + 1];
                p.scale_s2 += step[4 * k + 2];
                p.asymmetry_s += step[4 * k + 3];
                clamp_params(p, bounds, a_range, amp_max);
            }
            let trial_cost = win.cost(&trial);
            if !trial_cost.is_finite() {
                return Ok(non_finite(init, initial_cost, m));
            }
            if trial_cost < cost {
                let rel = (cost - trial_cost) / cost;
                params = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                if rel < opts.rel_tolerance {
                    status = FitStatus::Converged;
                    break 'outer;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                status = FitStatus::Converged;
                break 'outer;
            }
        }
    }
    Ok(FitOutcome {
        params,
        residual_rms: rms(cost),
        initial_rms: rms(initial_cost),
        iterations,
        status,
    })
}

fn non_finite(init: &[SpikeModelParams], initial_cost: f64, m: usize) -> FitOutcome {
    FitOutcome {
        params: init.to_vec(),
        residual_rms: (initial_cost / m as f64).sqrt(),
        initial_rms: (initial_cost / m as f64).sqrt(),
        iterations: 0,
        status: FitStatus::NonFinite,
    }
}

/// Fits a single template inside `window`; returns the parameters and the
/// residual RMS over the window.
pub fn fit_spike_model(
    signal: &[f64],
    sample_rate_hz: f64,
    window: (f64, f64),
    init: &SpikeModelParams,
    bounds: &FitBounds,
) -> Result<(SpikeModelParams, f64)> {
    let out = fit_templates(
        signal,
        sample_rate_hz,
        window,
        &[*init],
        bounds,
        &FitOptions::default(),
    )?;
    Ok((out.params[0], out.residual_rms))
}

/// Least-squares amplitude multipliers of fixed template shapes against the
/// data in `window` (the projection step). Returns one factor per template.
pub fn project_amplitudes(
    signal: &[f64],
    sample_rate_hz: f64,
    window: (f64, f64),
    params: &[SpikeModelParams],
) -> Result<Vec<f64>> {
    let win = Window::new(signal, sample_rate_hz, window)?;
    let k = params.len();
    let cols: Vec<Vec<f64>> = params
        .iter()
        .map(|p| win.model(std::slice::from_ref(p)))
        .collect();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for i in 0..k {
        rhs[i] = cols[i].iter().zip(win.x).map(|(g, x)| g * x).sum();
        for j in 0..k {
            gram[(i, j)] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
        }
    }
    let sol = gram
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()));
    Ok(match sol {
        Some(s) => s.iter().copied().collect(),
        None => (0..k)
            .map(|i| {
                if gram[(i, i)] > 0.0 {
                    rhs[i] / gram[(i, i)]
                } else {
                    0.0
                }
            })
            .collect(),
    })
}
