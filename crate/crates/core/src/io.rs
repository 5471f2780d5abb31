//! Text formats: recording CSV, ground-truth bundle, spike lists, maps and
//! JSON reports.
//!
//! Recording CSV:
//!
//! ```text
//! # sample_rate_hz=1000
//! ch1,ch2,ch3
//! 0.25,-1.5,3
//! ...
//! ```
//!
//! Floats are written in their shortest round-trip form, so reading back a
//! written file reproduces every sample bit for bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::despike::SpikeFit;
use crate::error::{Error, Result};
use crate::recording::Recording;
use crate::simulate::{BurstWindow, GroundTruth, InjectedSpike};
use crate::stmap::SpatioTemporalMap;
use crate::tfmap::TimeFrequencyMap;

const RATE_PREFIX: &str = "# sample_rate_hz=";

/// Shortest decimal that parses back to exactly `v`. Plain notation in the
/// usual range, exponent notation for very small or very large magnitudes.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn push_row(out: &mut String, values: impl Iterator<Item = f64>) {
    for (i, v) in values.enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_f64(v));
    }
    out.push('\n');
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_all(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn format_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn matrix_to_csv(sample_rate_hz: f64, labels: &[String], data: &[Vec<f64>]) -> Result<String> {
    if let Some(bad) = labels.iter().find(|l| l.contains([',', '\n', '\r'])) {
        return Err(Error::param(
            "labels",
            format!("label `{bad}` contains a separator"),
        ));
    }
    let n = data.first().map_or(0, Vec::len);
    let mut out = String::with_capacity(n * data.len() * 12 + 64);
    let _ = writeln!(out, "{RATE_PREFIX}{}", format_f64(sample_rate_hz));
    out.push_str(&labels.join(","));
    out.push('\n');
    for i in 0..n {
        push_row(&mut out, data.iter().map(|c| c[i]));
    }
    Ok(out)
}

pub fn write_recording(rec: &Recording, path: &Path) -> Result<()> {
    write_all(
        path,
        &matrix_to_csv(rec.sample_rate_hz(), rec.labels(), rec.data())?,
    )
}

/// Parses the recording CSV format. Errors carry the 1-based line number.
pub fn parse_recording(text: &str, path: &Path) -> Result<Recording> {
    let mut lines = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let (_, first) = lines.next().unwrap_or((1, ""));
    let rate_text = first
        .strip_prefix(RATE_PREFIX)
        .ok_or_else(|| format_err(path, 1, format!("missing `{RATE_PREFIX}<rate>` header")))?;
    let fs: f64 = rate_text
        .trim()
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite() && *v > 0.0)
        .ok_or_else(|| {
            format_err(
                path,
                1,
                format!("sample rate `{rate_text}` is not a positive number"),
            )
        })?;
    let (_, label_line) = lines
        .next()
        .ok_or_else(|| format_err(path, 2, "missing channel label line"))?;
    let labels: Vec<String> = label_line.split(',').map(str::to_string).collect();
    let nch = labels.len();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); nch];
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (ch, field) in line.split(',').enumerate() {
            count += 1;
            if ch >= nch {
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| {
                format_err(
                    path,
                    lineno,
                    format!("column {}: `{field}` is not a number", ch + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(format_err(
                    path,
                    lineno,
                    format!("column {}: non-finite value `{field}`", ch + 1),
                ));
            }
            data[ch].push(v);
        }
        if count != nch {
            return Err(format_err(
                path,
                lineno,
                format!("row has {count} values, expected {nch}"),
            ));
        }
    }
    if data[0].is_empty() {
        return Err(format_err(path, 3, "no samples"));
    }
    Recording::new(fs, labels, data).map_err(|e| format_err(path, 2, e.to_string()))
}

pub fn read_recording(path: &Path) -> Result<Recording> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_recording(&text, path)
}

/// JSON sidecar of a ground-truth bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub ictal_onset_s: f64,
    pub seizure_channel: usize,
    pub burst_windows: Vec<Vec<BurstWindow>>,
    pub spikes: Vec<Vec<InjectedSpike>>,
}

/// The four files of a ground-truth bundle written under `prefix`.
pub fn truth_paths(prefix: &Path) -> [PathBuf; 4] {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    [
        with(".spikes.csv"),
        with(".oscillation.csv"),
        with(".noise.csv"),
        with(".json"),
    ]
}

/// Writes the three components as recording CSVs plus a JSON sidecar.
pub fn write_ground_truth(
    truth: &GroundTruth,
    sample_rate_hz: f64,
    labels: &[String],
    prefix: &Path,
) -> Result<()> {
    let [spikes, osc, noise, json] = truth_paths(prefix);
    write_all(
        &spikes,
        &matrix_to_csv(sample_rate_hz, labels, &truth.spike_component)?,
    )?;
    write_all(
        &osc,
        &matrix_to_csv(sample_rate_hz, labels, &truth.oscillation_component)?,
    )?;
    write_all(
        &noise,
        &matrix_to_csv(sample_rate_hz, labels, &truth.noise_component)?,
    )?;
    write_json(
        &TruthSidecar {
            ictal_onset_s: truth.ictal_onset_s,
            seizure_channel: truth.seizure_channel,
            burst_windows: truth.burst_windows.clone(),
            spikes: truth.spikes.clone(),
        },
        &json,
    )
}

pub fn read_ground_truth(prefix: &Path) -> Result<GroundTruth> {
    let [spikes, osc, noise, json] = truth_paths(prefix);
    let side: TruthSidecar = read_json(&json)?;
    Ok(GroundTruth {
        spike_component: read_recording(&spikes)?.into_data(),
        oscillation_component: read_recording(&osc)?.into_data(),
        noise_component: read_recording(&noise)?.into_data(),
        burst_windows: side.burst_windows,
        spikes: side.spikes,
        ictal_onset_s: side.ictal_onset_s,
        seizure_channel: side.seizure_channel,
    })
}

/// One entry of `spikes.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub channel: String,
    pub peak_time_s: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    #[serde(rename = "a")]
    pub shift_s: f64,
    #[serde(rename = "b")]
    pub scale_s2: f64,
    #[serde(rename = "gamma")]
    pub asymmetry_s: f64,
    pub sign: f64,
    pub residual_rms: f64,
}

pub fn spike_records(labels: &[String], spike_train: &[Vec<SpikeFit>]) -> Vec<SpikeRecord> {
    spike_train
        .iter()
        .zip(labels)
        .flat_map(|(fits, label)| {
            fits.iter().map(move |f| SpikeRecord {
                channel: label.clone(),
                peak_time_s: f.candidate.peak_time_s,
                amplitude: f.params.amplitude,
                shift_s: f.params.shift_s,
                scale_s2: f.params.scale_s2,
                asymmetry_s: f.params.asymmetry_s,
                sign: f.params.polarity,
                residual_rms: f.residual_rms,
            })
        })
        .collect()
}

/// First row: `time_s` then the frequencies; one row per time sample.
pub fn write_tf_map(map: &TimeFrequencyMap, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(map.times_s.len() * (map.freqs_hz.len() + 1) * 12);
    out.push_str("time_s");
    for f in &map.freqs_hz {
        out.push(',');
        out.push_str(&format_f64(*f));
    }
    out.push('\n');
    for (i, t) in map.times_s.iter().enumerate() {
        push_row(
            &mut out,
            std::iter::once(*t).chain(map.power.iter().map(|row| row[i])),
        );
    }
    write_all(path, &out)
}

/// First row: `channel` then the times; one row per channel.
pub fn write_st_map(map: &SpatioTemporalMap, path: &Path) -> Result<()> {
    let mut out = String::with_capacity((map.n_channels() + 1) * map.n_times() * 12);
    out.push_str("channel");
    for t in &map.times_s {
        out.push(',');
        out.push_str(&format_f64(*t));
    }
    out.push('\n');
    for (label, row) in map.labels.iter().zip(&map.values) {
        out.push_str(label);
        out.push(',');
        push_row(&mut out, row.iter().copied());
    }
    write_all(path, &out)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// Reads only the header of a recording CSV (sample rate and labels).
pub fn read_recording_header(path: &Path) -> Result<(f64, Vec<String>)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let mut next = |n: usize| -> Result<String> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(path, e)),
            None => Err(format_err(path, n, "unexpected end of file")),
        }
    };
    let head = format!("{}\n{}\n0", next(1)?, next(2)?);
    let rec = parse_recording(&head, path)?;
    Ok((rec.sample_rate_hz(), rec.labels().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn shortest_formatting_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            0.1,
            1e-300,
            -2.5e-7,
            123456789.123,
            1e300,
            f64::MIN_POSITIVE,
            5e-324,
        ] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_f64(0.1), "0.1");
    }

    #[test]
    fn missing_header_names_line_one() {
        let err = parse_recording("ch1\n1\n", p()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }), "{err}");
    }

    #[test]
    fn ragged_row_names_its_line() {
        let text = "# sample_rate_hz=10\na,b,c\n1,2,3\n1,2\n";
        let err = parse_recording(text, p()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 4, .. }), "{err}");
        assert!(err.to_string().contains("2 values, expected 3"));
        let err = parse_recording("# sample_rate_hz=10\na\n1\n2,3\n", p()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 4, .. }), "{err}");
    }

    #[test]
    fn non_finite_and_garbage_rejected() {
        for bad in ["NaN", "inf", "1.2.3", ""] {
            let text = format!("# sample_rate_hz=10\na,b\n1,{bad}\n");
            assert!(
                matches!(
                    parse_recording(&text, p()),
                    Err(Error::Format { line: 3, .. })
                ),
                "{bad}"
            );
        }
        assert!(parse_recording("# sample_rate_hz=10\na\n", p()).is_err());
        assert!(parse_recording("# sample_rate_hz=-1\na\n1\n", p()).is_err());
    }

    #[test]
    fn crlf_tolerated() {
        let rec = parse_recording("# sample_rate_hz=10\r\na,b\r\n1,2\r\n", p()).unwrap();
        assert_eq!(rec.data(), &[vec![1.0], vec![2.0]]);
    }
}
