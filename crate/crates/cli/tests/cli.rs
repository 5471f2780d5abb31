use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn preictal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_preictal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = preictal(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    text.trim_end().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate_short(dir: &Path) -> PathBuf {
    let rec = dir.join("sim.csv");
    ok(&[
        "simulate",
        "--seed",
        "42",
        "--duration-s",
        "6",
        "--ictal-onset-s",
        "4",
        "--out",
        p(&rec),
        "--truth",
        p(&dir.join("truth")),
    ]);
    rec
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_filter_and_map_compose_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rec = simulate_short(d);
    for suffix in ["spikes.csv", "oscillation.csv", "noise.csv", "json"] {
        assert!(d.join(format!("truth.{suffix}")).exists(), "{suffix}");
    }

    let swt = d.join("swt.csv");
    ok(&["swt", "--in", p(&rec), "--out", p(&swt)]);
    let (despiked, bp, spikes) = (
        d.join("despiked.csv"),
        d.join("bp.csv"),
        d.join("spikes.json"),
    );
    ok(&[
        "despike",
        "--in",
        p(&rec),
        "--out",
        p(&despiked),
        "--bandpassed",
        p(&bp),
        "--spikes",
        p(&spikes),
    ]);
    let fits = read_json(&spikes);
    assert!(!fits.as_array().unwrap().is_empty());
    assert!(fits[0]["channel"].as_str().unwrap().starts_with("ch"));

    for (input, norm) in [(&swt, &rec), (&bp, &despiked)] {
        let map = d.join("map.csv");
        let report = d.join("report.json");
        ok(&[
            "stmap",
            "--in",
            p(input),
            "--norm-in",
            p(norm),
            "--out",
            p(&map),
            "--report",
            p(&report),
        ]);
        let text = fs::read_to_string(&map).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("channel,0,"));
        assert_eq!(lines[1].split(',').count(), 6001);
        let r = read_json(&report);
        assert_eq!(r["ranked_channels"].as_array().unwrap().len(), 6);
        assert_eq!(r["threshold_used"], 3.0);
    }

    let tf = d.join("tf.csv");
    ok(&[
        "tfmap",
        "--in",
        p(&rec),
        "--out",
        p(&tf),
        "--channel",
        "4",
        "--fmin",
        "60",
        "--fmax",
        "90",
    ]);
    let header = fs::read_to_string(&tf)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 32);
}

#[test]
fn too_many_levels_fail_with_code() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    fs::write(
        &short,
        "# sample_rate_hz=1000\nch1\n".to_string() + &"0.5\n".repeat(300),
    )
    .unwrap();
    let out = preictal(&[
        "swt",
        "--levels",
        "20",
        "--in",
        p(&short),
        "--out",
        p(&dir.path().join("o.csv")),
    ]);
    assert!(!out.status.success());
    let line = stderr_line(&out);
    assert!(line.starts_with("error[E_LEVELS]"), "{line}");
    assert!(line.contains("20"), "{line}");
}

#[test]
fn missing_header_reports_line_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "ch1,ch2\n1,2\n").unwrap();
    let out = preictal(&[
        "despike",
        "--in",
        p(&bad),
        "--out",
        p(&dir.path().join("o.csv")),
    ]);
    assert!(!out.status.success());
    let line = stderr_line(&out);
    assert!(line.starts_with("error[E_FORMAT]"), "{line}");
    assert!(line.contains("bad.csv:1:"), "{line}");
}

#[test]
fn unknown_flag_is_a_single_line_usage_error() {
    let out = preictal(&["stmap", "--in", "x.csv", "--out", "y.csv", "--bogus"]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("error[E_USAGE]"));
}

#[test]
fn conflicting_seed_flags_rejected() {
    let out = preictal(&[
        "compare",
        "--seeds",
        "3",
        "--seed-list",
        "1,2",
        "--out",
        "r.json",
    ]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("error[E_USAGE]"));
}

#[test]
fn bad_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "k_sigma = 2\nlevles = 3\n").unwrap();
    let out = preictal(&[
        "swt",
        "--in",
        "x.csv",
        "--out",
        "y.csv",
        "--config",
        p(&cfg),
    ]);
    let line = stderr_line(&out);
    assert!(
        line.starts_with("error[E_CONFIG]") && line.contains("levles"),
        "{line}"
    );
}

#[test]
fn flag_overrides_config_file_overrides_default() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rec = simulate_short(d);
    let cfg = d.join("run.cfg");
    fs::write(&cfg, "k_sigma = 2\n").unwrap();
    let threshold = |extra: &[&str]| -> f64 {
        let (map, report) = (d.join("m.csv"), d.join("r.json"));
        let mut args = vec![
            "stmap",
            "--in",
            p(&rec),
            "--out",
            p(&map),
            "--report",
            p(&report),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        read_json(&report)["threshold_used"].as_f64().unwrap()
    };
    assert_eq!(threshold(&[]), 3.0);
    assert_eq!(threshold(&["--config", p(&cfg)]), 2.0);
    assert_eq!(threshold(&["--config", p(&cfg), "--k-sigma", "4"]), 4.0);
}

#[test]
fn compare_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"n_channels":3,"sample_rate_hz":1000.0,"duration_s":6.0,"snr_db":5.0,"spike_rate_hz":1.0,
           "gamma_band":{"low_hz":65.0,"high_hz":85.0},"overlap_fraction":0.3,"ictal_onset_s":4.0,
           "seizure_channel":1,"burst_rate_hz":0.5,"burst_amplitude":1.0,"ictal_amplitude":2.0,"seed":1}"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    ok(&[
        "compare",
        "--seed-list",
        "5,6",
        "--spec",
        p(&spec),
        "--out",
        p(&report),
    ]);
    let r = read_json(&report);
    assert_eq!(r["n_runs"], 2);
    assert_eq!(r["per_seed"][1]["seed"], 6);
    assert_eq!(r["none"]["mean_spike_residual_fraction"], 1.0);
}
