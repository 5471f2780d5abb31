//! Symlet filter banks.
//!
//! Coefficients are the reconstruction low-pass filters (unit ℓ2 norm,
//! sum √2), obtained by spectral factorization of the Daubechies product
//! filter choosing the least phase-nonlinear root set.
#![allow(clippy::excessive_precision)]

use std::str::FromStr;

use crate::error::Error;

const SYM2: [f64; 4] = [
    0.48296291314453414337,
    0.83651630373780790558,
    0.22414386804201338103,
    -0.12940952255126038117,
];
const SYM3: [f64; 6] = [
    0.332670552950082616,
    0.80689150931109257649,
    0.4598775021184915701,
    -0.1350110200102545887,
    -0.085441273882026661693,
    0.035226291885709536603,
];
const SYM4: [f64; 8] = [
    0.032223100604051467872,
    -0.012603967262031303754,
    -0.099219543576633532585,
    0.2978577956053060514,
    0.80373875180513208088,
    0.49761866763277498998,
    -0.029635527646002491764,
    -0.075765714789502213228,
];
const SYM5: [f64; 10] = [
    0.027333068344998768818,
    0.02951949092570626125,
    -0.039134249302313843624,
    0.1993975339768555969,
    0.72340769040404079207,
    0.63397896345679206372,
    0.016602105764510848133,
    -0.17532808990805622424,
    -0.021101834024689041001,
    0.019538882735249826776,
];
const SYM6: [f64; 12] = [
    0.015404109327044824299,
    0.0034907120842221625153,
    -0.1179901111485200254,
    -0.048311742585698054971,
    0.49105594192797373304,
    0.78764114102865099607,
    0.33792942172816583271,
    -0.072637522786376583464,
    -0.021060292512370847992,
    0.044724901770781384663,
    0.001767711864254007741,
    -0.0078007083250323804142,
];
const SYM7: [f64; 14] = [
    0.012015419283549189053,
    0.017213376300804502861,
    -0.06490800354718848576,
    -0.064131289807385821039,
    0.36021846090626020101,
    0.78192159329172812499,
    0.48361091568226769662,
    -0.056804476889666969319,
    -0.10101092086842029949,
    0.044742349468352376652,
    0.020464207577546033667,
    -0.018126605131338460955,
    -0.0032832978474668107035,
    0.0022918339540537712112,
];
const SYM8: [f64; 16] = [
    0.0018899503327676891843,
    -0.00030292051472413308126,
    -0.014952258337062199118,
    0.0038087520138944894631,
    0.049137179673730286787,
    -0.027219029917103486322,
    -0.051945838107881800736,
    0.36444189483617893676,
    0.77718575169962802862,
    0.48135965125905339159,
    -0.061273359067811077843,
    -0.14329423835127266284,
    0.0076074873249766081919,
    0.031695087811525991431,
    -0.00054213233180001068935,
    -0.0033824159510050025955,
];

/// An orthogonal wavelet described by its low-pass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavelet {
    name: String,
    lowpass: Vec<f64>,
}

impl Wavelet {
    /// `sym2` .. `sym8`.
    pub fn symlet(order: usize) -> Result<Self, Error> {
        let taps: &[f64] = match order {
            2 => &SYM2,
            3 => &SYM3,
            4 => &SYM4,
            5 => &SYM5,
            6 => &SYM6,
            7 => &SYM7,
            8 => &SYM8,
            _ => return Err(Error::UnsupportedWavelet(format!("sym{order}"))),
        };
        Ok(Wavelet {
            name: format!("sym{order}"),
            lowpass: taps.to_vec(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Orthonormal low-pass filter `h` (Σh = √2).
    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    /// Quadrature mirror high-pass `g[k] = (-1)^k h[L-1-k]`.
    pub fn highpass(&self) -> Vec<f64> {
        let l = self.lowpass.len();
        (0..l)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s * self.lowpass[l - 1 - k]
            })
            .collect()
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let order = s
            .strip_prefix("sym")
            .and_then(|o| o.parse::<usize>().ok())
            .ok_or_else(|| Error::UnsupportedWavelet(s.to_string()))?;
        Wavelet::symlet(order)
    }
}

/// Integer "center of energy" of a filter, used to align coefficients with
/// signal time.
pub(crate) fn energy_center(taps: &[f64]) -> isize {
    let e: f64 = taps.iter().map(|v| v * v).sum();
    let c: f64 = taps
        .iter()
        .enumerate()
        .map(|(k, v)| k as f64 * v * v)
        .sum::<f64>()
        / e;
    c.round() as isize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_filters() {
        for order in 2..=8 {
            let w = Wavelet::symlet(order).unwrap();
            let h = w.lowpass();
            assert_eq!(h.len(), 2 * order);
            let s: f64 = h.iter().sum();
            assert!(
                (s - std::f64::consts::SQRT_2).abs() < 1e-14,
                "sym{order} sum {s}"
            );
            for m in 0..order {
                let dot: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
                let want = if m == 0 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-14, "sym{order} shift {m}: {dot}");
            }
        }
    }

    #[test]
    fn vanishing_moments() {
        for order in 2..=8 {
            let g = Wavelet::symlet(order).unwrap().highpass();
            for p in 0..order {
                let m: f64 = g
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (k as f64).powi(p as i32))
                    .sum();
                let scale: f64 = g
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (v * (k as f64).powi(p as i32)).abs())
                    .sum();
                assert!(
                    m.abs() < 1e-11 * scale.max(1.0),
                    "sym{order} moment {p}: {m}"
                );
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("sym5".parse::<Wavelet>().unwrap().len(), 10);
        assert!(matches!(
            "db4".parse::<Wavelet>(),
            Err(Error::UnsupportedWavelet(_))
        ));
        assert!("sym9".parse::<Wavelet>().is_err());
        assert!("sym1".parse::<Wavelet>().is_err());
    }
}
