//! Stationary (undecimated) wavelet transform.
//!
//! À-trous cascade: at level `j` the orthonormal filter pair is dilated by
//! `2^(j-1)` and applied circularly without downsampling, so every plane keeps
//! the input length. Filters are scaled by `1/√2`, which makes each analysis
//! step a tight frame whose adjoint is its exact inverse. Each filter is
//! centered on its energy centroid so coefficients line up with signal time.

mod filters;
mod mask;

pub use filters::Wavelet;
pub use mask::{
    apply_mask, derive_auto_intervals, extract_oscillations_swt, swt_mask_recording, LevelMask,
    MaskSpec,
};

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use filters::energy_center;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPlanes {
    /// Approximation at the deepest level.
    pub approx: Vec<f64>,
    /// `details[j - 1]` holds level `j`, finest first.
    pub details: Vec<Vec<f64>>,
    pub wavelet_name: String,
    pub sample_rate_hz: f64,
}

impl WaveletPlanes {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn len(&self) -> usize {
        self.approx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.approx.is_empty()
    }

    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }

    /// Every plane, details first then the approximation.
    pub fn planes(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.details.iter().chain(std::iter::once(&self.approx))
    }

    pub fn planes_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.details
            .iter_mut()
            .chain(std::iter::once(&mut self.approx))
    }

    /// Dyadic pass band of detail level `j`: `fs/2^(j+1) .. fs/2^j`.
    pub fn detail_band_hz(&self, level: usize) -> (f64, f64) {
        let hi = self.sample_rate_hz / 2f64.powi(level as i32);
        (hi / 2.0, hi)
    }
}

pub fn max_levels(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

/// Circular offsets `stride * (k - center) mod n` for each tap.
fn tap_offsets(len: usize, center: isize, stride: usize, n: usize) -> Vec<usize> {
    (0..len as isize)
        .map(|k| ((stride as isize) * (k - center)).rem_euclid(n as isize) as usize)
        .collect()
}

struct FilterBank {
    lo: Vec<f64>,
    hi: Vec<f64>,
    lo_center: isize,
    hi_center: isize,
}

impl FilterBank {
    fn new(wavelet: &Wavelet) -> Self {
        let lo: Vec<f64> = wavelet
            .lowpass()
            .iter()
            .map(|v| v * FRAC_1_SQRT_2)
            .collect();
        let hi: Vec<f64> = wavelet
            .highpass()
            .iter()
            .map(|v| v * FRAC_1_SQRT_2)
            .collect();
        let lo_center = energy_center(&lo);
        let hi_center = energy_center(&hi);
        FilterBank {
            lo,
            hi,
            lo_center,
            hi_center,
        }
    }
}

fn analyze(x: &[f64], taps: &[f64], offsets: &[usize]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            taps.iter()
                .zip(offsets)
                .map(|(&h, &o)| {
                    let mut j = i + o;
                    if j >= n {
                        j -= n;
                    }
                    h * x[j]
                })
                .sum()
        })
        .collect()
}

/// Adds the adjoint of `analyze` applied to `y` into `out`.
fn synthesize_into(out: &mut [f64], y: &[f64], taps: &[f64], offsets: &[usize]) {
    let n = y.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (&h, &off) in taps.iter().zip(offsets) {
            let j = if i >= off { i - off } else { i + n - off };
            acc += h * y[j];
        }
        *o += acc;
    }
}

pub fn swt_decompose(
    signal: &[f64],
    wavelet: &Wavelet,
    levels: usize,
    sample_rate_hz: f64,
) -> Result<WaveletPlanes> {
    let n = signal.len();
    if n < wavelet.len() {
        return Err(Error::TooShort(format!(
            "signal of length {n} shorter than the {}-tap {} filter",
            wavelet.len(),
            wavelet.name()
        )));
    }
    let max = max_levels(n);
    if levels < 1 || levels > max {
        return Err(Error::LevelsTooDeep {
            levels,
            len: n,
            max,
        });
    }
    let bank = FilterBank::new(wavelet);
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for j in 1..=levels {
        let stride = 1usize << (j - 1);
        let lo_off = tap_offsets(bank.lo.len(), bank.lo_center, stride, n);
        let hi_off = tap_offsets(bank.hi.len(), bank.hi_center, stride, n);
        details.push(analyze(&approx, &bank.hi, &hi_off));
        approx = analyze(&approx, &bank.lo, &lo_off);
    }
    Ok(WaveletPlanes {
        approx,
        details,
        wavelet_name: wavelet.name().to_string(),
        sample_rate_hz,
    })
}

pub fn iswt_reconstruct(planes: &WaveletPlanes) -> Result<Vec<f64>> {
    let n = planes.approx.len();
    if planes.details.is_empty() {
        return Err(Error::ShapeMismatch("no detail planes".into()));
    }
    if let Some((j, d)) = planes
        .details
        .iter()
        .enumerate()
        .find(|(_, d)| d.len() != n)
    {
        return Err(Error::ShapeMismatch(format!(
            "detail level {} has {} coefficients, approximation has {n}",
            j + 1,
            d.len()
        )));
    }
    let wavelet: Wavelet = planes.wavelet_name.parse()?;
    let bank = FilterBank::new(&wavelet);
    let mut approx = planes.approx.clone();
    for j in (1..=planes.levels()).rev() {
        let stride = 1usize << (j - 1);
        let lo_off = tap_offsets(bank.lo.len(), bank.lo_center, stride, n);
        let hi_off = tap_offsets(bank.hi.len(), bank.hi_center, stride, n);
        let mut prev = vec![0.0; n];
        synthesize_into(&mut prev, &approx, &bank.lo, &lo_off);
        synthesize_into(&mut prev, &planes.details[j - 1], &bank.hi, &hi_off);
        approx = prev;
    }
    Ok(approx)
}
