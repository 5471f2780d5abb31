//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn tone(freq_hz: f64, fs: f64, n: usize, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / fs).sin())
        .collect()
}

fn centroid(f: &[f64]) -> isize {
    let e: f64 = f.iter().map(|v| v * v).sum();
    (f.iter()
        .enumerate()
        .map(|(k, v)| k as f64 * v * v)
        .sum::<f64>()
        / e)
        .round() as isize
}

/// Sparse filter as `(offset, tap)` pairs.
type Sparse = Vec<(isize, f64)>;

fn upsample(taps: &[f64], stride: isize) -> Sparse {
    let c = centroid(taps);
    taps.iter()
        .enumerate()
        .map(|(k, &h)| (stride * (k as isize - c), h))
        .collect()
}

fn compose(a: &Sparse, b: &Sparse) -> Sparse {
    let mut out: std::collections::BTreeMap<isize, f64> = Default::default();
    for &(oa, ha) in a {
        for &(ob, hb) in b {
            *out.entry(oa + ob).or_insert(0.0) += ha * hb;
        }
    }
    out.into_iter().collect()
}

fn apply(x: &[f64], f: &Sparse) -> Vec<f64> {
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            f.iter()
                .map(|&(o, h)| h * x[(i + o).rem_euclid(n) as usize])
                .sum()
        })
        .collect()
}

/// Undecimated planes by brute force: each level's equivalent filter is
/// built by explicitly upsampling and composing the per-level filters, then
/// applied by direct circular correlation of the input. Returns
/// `(details finest first, approximation)`.
///
/// `lowpass` is the orthonormal reconstruction lowpass (unit ℓ2 norm); the
/// analysis pair used here is that filter and its quadrature mirror, both
/// scaled by 1/√2.
pub fn swt_oracle(x: &[f64], lowpass: &[f64], levels: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let l = lowpass.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h: Vec<f64> = lowpass.iter().map(|v| v * s).collect();
    let g: Vec<f64> = (0..l)
        .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * lowpass[l - 1 - k] * s)
        .collect();
    let mut chain: Sparse = vec![(0, 1.0)];
    let mut details = Vec::with_capacity(levels);
    for j in 1..=levels {
        let stride = 1isize << (j - 1);
        details.push(apply(x, &compose(&chain, &upsample(&g, stride))));
        chain = compose(&chain, &upsample(&h, stride));
    }
    (details, apply(x, &chain))
}

/// Half-sample symmetric extension (`x[-1] = x[0]`), any offset.
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Amplitude-normalized complex Morlet coefficients by direct convolution
/// with the reflected signal, `O(n · support)` per frequency.
pub fn morlet_oracle(x: &[f64], fs: f64, omega: f64, freq: f64) -> Vec<Complex<f64>> {
    let sigma = omega / (2.0 * PI * freq);
    let half = (5.0 * sigma * fs).ceil() as isize;
    let raw: Vec<Complex<f64>> = (-half..=half)
        .map(|k| {
            let t = k as f64 / fs;
            let env = (-t * t / (2.0 * sigma * sigma)).exp();
            Complex::new(
                env * (2.0 * PI * freq * t).cos(),
                env * (2.0 * PI * freq * t).sin(),
            )
        })
        .collect();
    let scale = 2.0 / raw.iter().map(|c| c.norm()).sum::<f64>();
    let n = x.len();
    (0..n as isize)
        .map(|i| {
            let mut acc = Complex::new(0.0, 0.0);
            for k in -half..=half {
                acc += raw[(k + half) as usize] * x[reflect(i - k, n)];
            }
            acc * scale
        })
        .collect()
}
