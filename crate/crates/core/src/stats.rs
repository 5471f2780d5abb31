//! Small numeric helpers shared across modules.

/// Half-sample symmetric reflection: `x[-1] = x[0]`, `x[n] = x[n-1]`.
/// Valid for any offset, reflecting repeatedly when needed.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Centered moving average of width `2 * half + 1` with symmetric reflection.
/// Conserves the sum of `x` exactly in exact arithmetic.
pub fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    if half == 0 || n == 0 {
        return x.to_vec();
    }
    let width = 2 * half + 1;
    let at = |i: isize| x[reflect_index(i, n)];
    let mut out = Vec::with_capacity(n);
    let mut acc: f64 = (-(half as isize)..=half as isize).map(at).sum();
    out.push(acc / width as f64);
    for i in 1..n as isize {
        acc += at(i + half as isize) - at(i - half as isize - 1);
        out.push(acc / width as f64);
    }
    out
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

/// Median absolute deviation scaled by 1.4826, a consistent estimator of the
/// standard deviation for Gaussian data.
pub fn robust_std(values: &[f64]) -> f64 {
    let Some(med) = median(values) else {
        return 0.0;
    };
    let dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&dev).unwrap_or(0.0)
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len().max(1) as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Pearson correlation, `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Maximal runs of `true` as half-open index ranges.
pub fn true_runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, mask.len()));
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_matches_symmetric_extension() {
        let n = 4;
        let idx: Vec<usize> = (-5..9).map(|i| reflect_index(i, n)).collect();
        assert_eq!(idx, vec![3, 3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0, 0]);
    }

    #[test]
    fn moving_average_conserves_sum() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64).collect();
        for half in [1, 3, 10, 24] {
            let y = moving_average(&x, half);
            let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
            assert!((sx - sy).abs() < 1e-9, "half {half}: {sx} vs {sy}");
        }
    }

    #[test]
    fn robust_std_of_gaussian_like_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(robust_std(&[0.0; 10]), 0.0);
        // MAD of {-1, 0, 1} is 1
        assert!((robust_std(&[-1.0, 0.0, 1.0]) - 1.4826).abs() < 1e-12);
    }

    #[test]
    fn runs() {
        assert_eq!(true_runs(&[true, true, false, true]), vec![(0, 2), (3, 4)]);
        assert!(true_runs(&[false, false]).is_empty());
    }
}
