use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use preictal::config::RunConfig;
use preictal::despike::despike_recording;
use preictal::evaluate::compare_seeds;
use preictal::fir::bandpass_filter;
use preictal::io;
use preictal::simulate::{synthesize_recording, SimulationSpec};
use preictal::stmap::{log_scale, stmap_pipeline};
use preictal::swt::extract_oscillations_swt;
use preictal::tfmap::wavelet_transform;
use preictal::{Error, Recording};

#[derive(Parser)]
#[command(
    name = "preictal",
    version,
    about = "Gamma extraction and seizure build-up maps for multichannel recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a recording with known spikes, bursts and ictal onset.
    Simulate(SimulateArgs),
    /// SWT masking, reconstruction and band-pass.
    Swt(SwtArgs),
    /// Spike detection, template fitting and subtraction.
    Despike(DespikeArgs),
    /// Morlet time-frequency power of one channel.
    Tfmap(TfmapArgs),
    /// Normalized gamma map and build-up detection.
    Stmap(StmapArgs),
    /// SWT vs despike vs raw over simulated seeds.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Flat key = value file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON simulation spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_channels: Option<usize>,
    #[arg(long)]
    sample_rate_hz: Option<f64>,
    #[arg(long)]
    duration_s: Option<f64>,
    /// `inf` disables noise.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    spike_rate_hz: Option<f64>,
    #[arg(long)]
    ictal_onset_s: Option<f64>,
    /// 1-based channel number.
    #[arg(long)]
    seizure_channel: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Prefix for the ground-truth bundle (<prefix>.spikes.csv, .oscillation.csv, .noise.csv, .json).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SwtArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    wavelet: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    band: Option<String>,
    /// auto[:FRACTION], keep or zero.
    #[arg(long)]
    mask: Option<String>,
    #[command(flatten)]
    cfg: ConfigArg,
}

#[derive(Args)]
struct DespikeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON list of fitted spikes.
    #[arg(long)]
    spikes: Option<PathBuf>,
    /// Fitted spike model signal, as a recording CSV.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Also write the despiked signal band-passed to the configured band.
    #[arg(long)]
    bandpassed: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    window_ms: Option<String>,
    #[command(flatten)]
    cfg: ConfigArg,
}

#[derive(Args)]
struct TfmapArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Channel label, or 1-based channel number.
    #[arg(long)]
    channel: String,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    fmin: Option<String>,
    #[arg(long)]
    fmax: Option<String>,
    #[arg(long)]
    fstep: Option<String>,
    #[command(flatten)]
    cfg: ConfigArg,
}

#[derive(Args)]
struct StmapArgs {
    /// Signal the gamma map is computed from (typically band-passed).
    #[arg(long = "in")]
    input: PathBuf,
    /// Signal the low-band map is computed from; defaults to --in.
    #[arg(long)]
    norm_in: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    norm: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    smooth_ms: Option<String>,
    #[arg(long)]
    k_sigma: Option<String>,
    #[arg(long)]
    min_duration_ms: Option<String>,
    /// Write log10 values to the map CSV. Detection still uses linear values.
    #[arg(long)]
    log: bool,
    #[command(flatten)]
    cfg: ConfigArg,
}

#[derive(Args)]
struct CompareArgs {
    /// Number of consecutive seeds starting at --first-seed.
    #[arg(long, default_value_t = 20, conflicts_with = "seed_list")]
    seeds: usize,
    #[arg(long, default_value_t = 42)]
    first_seed: u64,
    /// Comma-separated explicit seeds.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// `default` or a JSON simulation spec.
    #[arg(long, default_value = "default")]
    spec: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigArg,
}

enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult = Result<(), CliError>;

fn resolve(cfg: &ConfigArg, flags: &[(&str, &Option<String>)]) -> Result<RunConfig, Error> {
    let overrides: Vec<(&str, String)> = flags
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (*k, v.clone())))
        .collect();
    RunConfig::resolve(cfg.config.as_deref(), &overrides)
}

fn load_spec(path: Option<&Path>) -> Result<SimulationSpec, Error> {
    match path {
        Some(p) => io::read_json(p),
        None => Ok(SimulationSpec::default()),
    }
}

fn simulate(a: SimulateArgs) -> CliResult {
    let mut spec = load_spec(a.spec.as_deref())?;
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    if let Some(v) = a.n_channels {
        spec.n_channels = v;
    }
    if let Some(v) = a.sample_rate_hz {
        spec.sample_rate_hz = v;
    }
    if let Some(v) = a.duration_s {
        spec.duration_s = v;
    }
    if let Some(v) = a.snr_db {
        spec.snr_db = v;
    }
    if let Some(v) = a.spike_rate_hz {
        spec.spike_rate_hz = v;
    }
    if let Some(v) = a.ictal_onset_s {
        spec.ictal_onset_s = v;
    }
    if let Some(v) = a.seizure_channel {
        if v == 0 {
            return Err(CliError::Usage("--seizure-channel is 1-based".into()));
        }
        spec.seizure_channel = v - 1;
    }
    let (rec, truth) = synthesize_recording(&spec)?;
    io::write_recording(&rec, &a.out)?;
    if let Some(prefix) = a.truth {
        io::write_ground_truth(&truth, rec.sample_rate_hz(), rec.labels(), &prefix)?;
    }
    Ok(())
}

fn swt(a: SwtArgs) -> CliResult {
    let cfg = resolve(
        &a.cfg,
        &[
            ("wavelet", &a.wavelet),
            ("levels", &a.levels),
            ("band", &a.band),
            ("mask", &a.mask),
        ],
    )?;
    let rec = io::read_recording(&a.input)?;
    let out = extract_oscillations_swt(
        &rec,
        &cfg.wavelet()?,
        cfg.levels,
        cfg.band,
        &cfg.mask_spec(),
    )?;
    io::write_recording(&out, &a.out)?;
    Ok(())
}

fn despike(a: DespikeArgs) -> CliResult {
    let cfg = resolve(&a.cfg, &[("detect_k", &a.k), ("window_ms", &a.window_ms)])?;
    let rec = io::read_recording(&a.input)?;
    let result = despike_recording(&rec, &cfg.despike_config())?;
    io::write_recording(&result.despiked, &a.out)?;
    if let Some(p) = a.spikes {
        io::write_json(&io::spike_records(rec.labels(), &result.spike_train), &p)?;
    }
    if let Some(p) = a.model {
        io::write_recording(&rec.with_data(result.model_signal.clone())?, &p)?;
    }
    if let Some(p) = a.bandpassed {
        io::write_recording(&bandpass_filter(&result.despiked, cfg.band)?, &p)?;
    }
    Ok(())
}

fn channel_index(rec: &Recording, sel: &str) -> Result<usize, CliError> {
    if let Some(i) = rec.channel_index(sel) {
        return Ok(i);
    }
    match sel.parse::<usize>() {
        Ok(n) if (1..=rec.n_channels()).contains(&n) => Ok(n - 1),
        _ => Err(CliError::Core(Error::InvalidParameter {
            field: "channel",
            reason: format!(
                "`{sel}` is neither a label nor a channel number in 1..={}",
                rec.n_channels()
            ),
        })),
    }
}

fn tfmap(a: TfmapArgs) -> CliResult {
    let cfg = resolve(
        &a.cfg,
        &[
            ("tf_omega", &a.omega),
            ("tf_fmin", &a.fmin),
            ("tf_fmax", &a.fmax),
            ("tf_fstep", &a.fstep),
        ],
    )?;
    let rec = io::read_recording(&a.input)?;
    let ch = channel_index(&rec, &a.channel)?;
    let mut map = wavelet_transform(rec.channel(ch), rec.sample_rate_hz(), &cfg.tf_spec()?)?;
    map.channel_label = rec.labels()[ch].clone();
    io::write_tf_map(&map, &a.out)?;
    Ok(())
}

fn stmap(a: StmapArgs) -> CliResult {
    let cfg = resolve(
        &a.cfg,
        &[
            ("gamma_band", &a.gamma),
            ("norm_band", &a.norm),
            ("st_omega", &a.omega),
            ("smooth_ms", &a.smooth_ms),
            ("k_sigma", &a.k_sigma),
            ("min_duration_ms", &a.min_duration_ms),
        ],
    )?;
    let rec = io::read_recording(&a.input)?;
    let norm_src = match &a.norm_in {
        Some(p) => io::read_recording(p)?,
        None => rec.clone(),
    };
    let (map, report) = stmap_pipeline(&rec, &norm_src, &cfg.stmap_config())?;
    let map = if a.log { log_scale(&map) } else { map };
    io::write_st_map(&map, &a.out)?;
    if let Some(p) = a.report {
        io::write_json(&report, &p)?;
    }
    Ok(())
}

fn compare(a: CompareArgs) -> CliResult {
    let cfg = resolve(&a.cfg, &[])?;
    let spec = match a.spec.as_str() {
        "default" => SimulationSpec::default(),
        path => load_spec(Some(Path::new(path)))?,
    };
    let seeds: Vec<u64> = match a.seed_list {
        Some(list) => list,
        None => (0..a.seeds as u64).map(|i| a.first_seed + i).collect(),
    };
    if seeds.is_empty() {
        return Err(CliError::Usage("no seeds to run".into()));
    }
    let report = compare_seeds(&spec, &cfg, &seeds)?;
    io::write_json(&report, &a.out)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "runs {}  despike<swt residual in {}",
        report.n_runs, report.despike_beats_swt_runs
    );
    for (name, s) in [
        ("swt", &report.swt),
        ("despike", &report.despike),
        ("none", &report.none),
    ] {
        println!(
            "{name:8} residual {}  corr {}  channel ok {}  build-up ok {}",
            fmt(s.mean_spike_residual_fraction),
            fmt(s.mean_oscillation_recovery_corr),
            s.channel_correct_runs,
            s.buildup_correct_runs
        );
    }
    Ok(())
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PREICTAL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "PREICTAL_THREADS must be a non-negative integer, got `{v}`"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    let result = init_threads().and_then(|_| match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Swt(a) => swt(a),
        Command::Despike(a) => despike(a),
        Command::Tfmap(a) => tfmap(a),
        Command::Stmap(a) => stmap(a),
        Command::Compare(a) => compare(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error[E_USAGE]: {}", one_line(&m));
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::from(1)
        }
    }
}
