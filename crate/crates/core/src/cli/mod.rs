//! `tempord` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure.

mod manifest;
mod output;
mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::engine::{run_analysis_with, Execution};
use crate::preprocess::{
    decimate, detect_r_peaks, load_bivariate_csv, load_channel_csv, write_bivariate_csv,
    ColumnSpec, PreprocessError, RrCurve,
};
use crate::synth::{generate, SynthError, SynthKind, SynthSpec};
use crate::types::{
    seconds_to_samples, AnalysisConfig, BivariateRecord, DistanceKind, Method, Scaling, TimeSeries,
    ValidationError,
};

pub use manifest::{FileDigest, OutputSet, RunManifest};
pub use output::{
    read_matrix_csv, render_cv_csv, render_heatmap, render_matrix_csv, write_heatmap,
    write_matrix_csv, MatrixTable,
};
pub use report::{read_stability_file, summarize, StabilityFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Worker-count cap for the matrix computation; 0 or unset means automatic.
pub const THREADS_ENV: &str = "TEMPORD_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<PreprocessError> for CliError {
    fn from(e: PreprocessError) -> Self {
        match e {
            PreprocessError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tempord",
    version,
    about = "Temporal-order analysis of paired biosignals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the temporal-order matrix, causal vector and stability summary.
    Analyze(AnalyzeArgs),
    /// Turn raw ECG and respiration recordings into an analysis-ready pair.
    Preprocess(PreprocessArgs),
    /// Write a synthetic pair with a known lag.
    Synth(SynthArgs),
    /// Summarize stability files per condition label.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Lm,
    Td,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistanceArg {
    Manhattan,
    Fourier,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalingArg {
    #[value(alias = "0")]
    None,
    #[value(alias = "1")]
    Uniform,
    #[value(alias = "2")]
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKindArg {
    LaggedSine,
    RsaPair,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for all output files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// File-name prefix shared by the output set.
    #[arg(long, default_value = "tempord")]
    pub prefix: String,
    /// Leave the manifest timestamp empty so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Pair CSV with a time column and two channels.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "time_s")]
    pub time_col: String,
    #[arg(long, default_value = "ch1")]
    pub ch1: String,
    #[arg(long, default_value = "ch2")]
    pub ch2: String,
    /// Treat ch2 as signal1 and ch1 as signal2.
    #[arg(long)]
    pub swap: bool,
    #[arg(long, value_enum, default_value = "td")]
    pub method: MethodArg,
    /// Distance used by the TD method.
    #[arg(long, value_enum, default_value = "manhattan")]
    pub distance: DistanceArg,
    /// Per-segment scaling (0 = none, 1 = uniform, 2 = gaussian).
    #[arg(long, value_enum, default_value = "gaussian")]
    pub scaling: ScalingArg,
    /// Segment length in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub segment_sec: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub shift_min_sec: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub shift_max_sec: f64,
    /// Shift grid step in seconds [default: one sample].
    #[arg(long)]
    pub shift_step_sec: Option<f64>,
    /// Window advance in seconds [default: one sample].
    #[arg(long)]
    pub window_step_sec: Option<f64>,
    /// Keep only scores above this (LM, in [0, 1]) or below it (TD, > 0);
    /// 0.90 for LM and 0.15 for TD are typical.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Stable-run tolerance in shift steps.
    #[arg(long, default_value_t = 1)]
    pub stable_tolerance_steps: usize,
    /// Free-form condition label stored in the stability file.
    #[arg(long)]
    pub label: Option<String>,
    /// Also write a PPM heatmap.
    #[arg(long)]
    pub heatmap: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    /// Raw ECG CSV; requires --resp.
    #[arg(long, requires = "resp", conflicts_with = "input")]
    pub ecg: Option<PathBuf>,
    #[arg(long, default_value = "ecg")]
    pub ecg_col: String,
    /// Respiration CSV sampled at a multiple of --rate.
    #[arg(long, requires = "ecg")]
    pub resp: Option<PathBuf>,
    #[arg(long, default_value = "resp")]
    pub resp_col: String,
    #[arg(long, default_value = "time_s")]
    pub time_col: String,
    /// Output sample rate in Hz.
    #[arg(long, default_value_t = 25.0)]
    pub rate: f64,
    /// Existing pair CSV to decimate instead.
    #[arg(long, requires = "factor")]
    pub input: Option<PathBuf>,
    /// Decimation factor for --input.
    #[arg(long)]
    pub factor: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "rsa-pair")]
    pub kind: SynthKindArg,
    #[arg(long, default_value_t = 120.0)]
    pub duration_sec: f64,
    #[arg(long, default_value_t = 25.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 6.0)]
    pub breath_rate_bpm: f64,
    /// Sine frequency; overrides the breathing rate.
    #[arg(long)]
    pub frequency_hz: Option<f64>,
    /// Tidal-volume amplitude.
    #[arg(long, default_value_t = 1.0)]
    pub depth: f64,
    /// Seconds by which signal1 precedes signal2.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lag_sec: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000.0)]
    pub baseline_ms: f64,
    #[arg(long, default_value_t = 50.0)]
    pub gain_ms: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Stability JSON files written by `analyze`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Messages go to standard error.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let echo: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(cli, echo) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("tempord: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, echo: Vec<String>) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => analyze(&a, echo),
        Command::Preprocess(a) => preprocess(&a, echo),
        Command::Synth(a) => synth(&a, echo),
        Command::Report(a) => report_cmd(&a, echo),
    }
}

fn execution_from_env() -> Result<Execution, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(Execution::Parallel),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(Execution::Parallel),
            Ok(n) => Ok(Execution::Threads(n)),
            Err(_) => Err(CliError::Invalid(format!(
                "{THREADS_ENV}={v} is not a worker count"
            ))),
        },
    }
}

fn samples(name: &str, seconds: f64, rate: f64) -> Result<i64, CliError> {
    seconds_to_samples(seconds, rate).map_err(|e| CliError::Invalid(format!("--{name}: {e}")))
}

fn positive_samples(name: &str, seconds: f64, rate: f64) -> Result<usize, CliError> {
    let n = samples(name, seconds, rate)?;
    usize::try_from(n)
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("--{name} must be positive, got {seconds}")))
}

impl AnalyzeArgs {
    fn method(&self) -> Method {
        match self.method {
            MethodArg::Lm => Method::Lm,
            MethodArg::Td => Method::Td,
        }
    }

    fn distance(&self) -> DistanceKind {
        match self.distance {
            DistanceArg::Manhattan => DistanceKind::Manhattan,
            DistanceArg::Fourier => DistanceKind::Fourier,
        }
    }

    fn scaling(&self) -> Scaling {
        match self.scaling {
            ScalingArg::None => Scaling::None,
            ScalingArg::Uniform => Scaling::Uniform,
            ScalingArg::Gaussian => Scaling::Gaussian,
        }
    }

    fn config(&self, rate: f64) -> Result<AnalysisConfig, CliError> {
        let step =
            |name: &str, v: Option<f64>| v.map_or(Ok(1), |s| positive_samples(name, s, rate));
        Ok(AnalysisConfig::builder()
            .method(self.method())
            .distance(self.distance())
            .scaling(self.scaling())
            .segment_len_samples(positive_samples("segment-sec", self.segment_sec, rate)?)
            .shift_range_samples(
                samples("shift-min-sec", self.shift_min_sec, rate)?,
                samples("shift-max-sec", self.shift_max_sec, rate)?,
            )
            .shift_step_samples(step("shift-step-sec", self.shift_step_sec)?)
            .window_step_samples(step("window-step-sec", self.window_step_sec)?)
            .threshold(self.threshold)
            .stable_tolerance_steps(self.stable_tolerance_steps)
            .build()?)
    }
}

fn analyze(args: &AnalyzeArgs, echo: Vec<String>) -> Result<(), CliError> {
    // threshold bounds depend only on the method, so report them before touching files
    AnalysisConfig::builder()
        .method(args.method())
        .threshold(args.threshold)
        .build()?;
    let input = args
        .input
        .as_ref()
        .ok_or_else(|| CliError::Invalid("--input is required".into()))?;
    let columns = ColumnSpec {
        time: args.time_col.clone(),
        ch1: args.ch1.clone(),
        ch2: args.ch2.clone(),
    };
    let mut record: BivariateRecord<f64> = load_bivariate_csv(input, &columns)?;
    if args.swap {
        record = record.swapped();
    }
    let rate = record.sample_rate_hz();
    let config = args.config(rate)?;
    let outcome = run_analysis_with(&record, &config, execution_from_env()?)?;

    let out = OutputSet::new(args.output.out_dir.clone(), args.output.prefix.clone())?;
    let manifest_name = out.manifest_name();
    let mut written = Vec::new();

    let matrix_path = out.path("matrix.csv");
    write_matrix_csv(&outcome.matrix, &matrix_path)?;
    written.push(matrix_path);

    let cv_path = out.path("cv.csv");
    std::fs::write(&cv_path, render_cv_csv(&outcome.causal_vector))?;
    written.push(cv_path);

    let stability_path = out.path("stability.json");
    let stability = StabilityFile {
        report: outcome.stability.clone(),
        label: args.label.clone(),
        manifest: Some(manifest_name.clone()),
    };
    let mut text =
        serde_json::to_string_pretty(&stability).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&stability_path, text)?;
    written.push(stability_path);

    if args.heatmap {
        let heatmap_path = out.path("heatmap.ppm");
        write_heatmap(
            &outcome.matrix,
            &heatmap_path,
            Some(&format!("manifest: {manifest_name}")),
        )?;
        written.push(heatmap_path);
    }

    let settings = json!({
        "sample_rate_hz": rate,
        "labels": record.labels(),
        "analysis": config,
    });
    let mut manifest = RunManifest::new("analyze", echo, settings, !args.output.no_timestamp);
    manifest.add_input(input)?;
    for p in &written {
        manifest.add_output(p)?;
    }
    manifest.write(&out.manifest_path())?;
    Ok(())
}

/// Cuts both series to their common time span; they must share a grid.
fn common_span(
    a: TimeSeries<f64>,
    b: TimeSeries<f64>,
) -> Result<(TimeSeries<f64>, TimeSeries<f64>), CliError> {
    let rate = a.sample_rate_hz();
    let start = a.start_time_s().max(b.start_time_s());
    let end = (a.start_time_s() + (a.len() as f64 - 1.0) / rate)
        .min(b.start_time_s() + (b.len() as f64 - 1.0) / rate);
    if end < start {
        return Err(CliError::Invalid(
            "ECG and respiration recordings do not overlap".into(),
        ));
    }
    let n = ((end - start) * rate).round() as usize + 1;
    let cut = |ts: &TimeSeries<f64>| -> Result<TimeSeries<f64>, CliError> {
        let offset = ((start - ts.start_time_s()) * rate).round() as usize;
        Ok(TimeSeries::new(
            ts.values()[offset..offset + n].to_vec(),
            rate,
            ts.time_of(offset),
        )?)
    };
    Ok((cut(&a)?, cut(&b)?))
}

fn preprocess(args: &PreprocessArgs, echo: Vec<String>) -> Result<(), CliError> {
    let out = OutputSet::new(args.output.out_dir.clone(), args.output.prefix.clone())?;
    let mut inputs: Vec<&Path> = Vec::new();
    let record = match (&args.ecg, &args.resp, &args.input, args.factor) {
        (Some(ecg_path), Some(resp_path), None, _) => {
            inputs.extend([ecg_path.as_path(), resp_path.as_path()]);
            let ecg: TimeSeries<f64> = load_channel_csv(ecg_path, &args.time_col, &args.ecg_col)?;
            let resp: TimeSeries<f64> =
                load_channel_csv(resp_path, &args.time_col, &args.resp_col)?;
            let ratio = resp.sample_rate_hz() / args.rate;
            if !(ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
                return Err(CliError::Invalid(format!(
                    "respiration rate {} Hz is not a multiple of --rate {}",
                    resp.sample_rate_hz(),
                    args.rate
                )));
            }
            let resp = decimate(&resp, ratio.round() as usize)?;
            let curve = RrCurve::new(&detect_r_peaks(&ecg)?)?;
            let k = ((curve.start_s() - resp.start_time_s()) * args.rate - 1e-9).ceil();
            let tach = curve.sample::<f64>(resp.start_time_s() + k / args.rate, args.rate)?;
            let (tach, resp) = common_span(tach, resp)?;
            BivariateRecord::new(tach, resp, ["tachogram".into(), args.resp_col.clone()])?
        }
        (None, None, Some(input), Some(factor)) => {
            inputs.push(input.as_path());
            let rec: BivariateRecord<f64> = load_bivariate_csv(input, &ColumnSpec::default())?;
            BivariateRecord::new(
                decimate(rec.signal1(), factor)?,
                decimate(rec.signal2(), factor)?,
                rec.labels().clone(),
            )?
        }
        _ => {
            return Err(CliError::Invalid(
                "give either --ecg with --resp, or --input with --factor".into(),
            ))
        }
    };
    let pair_path = out.path("pair.csv");
    write_bivariate_csv(&record, &pair_path)?;
    let settings = json!({
        "sample_rate_hz": record.sample_rate_hz(),
        "labels": record.labels(),
        "factor": args.factor,
    });
    let mut manifest = RunManifest::new("preprocess", echo, settings, !args.output.no_timestamp);
    for p in inputs {
        manifest.add_input(p)?;
    }
    manifest.add_output(&pair_path)?;
    manifest.write(&out.manifest_path())?;
    Ok(())
}

fn synth(args: &SynthArgs, echo: Vec<String>) -> Result<(), CliError> {
    let spec = SynthSpec {
        kind: match args.kind {
            SynthKindArg::LaggedSine => SynthKind::LaggedSine,
            SynthKindArg::RsaPair => SynthKind::RsaPair,
        },
        duration_s: args.duration_sec,
        sample_rate_hz: args.rate,
        breath_rate_bpm: args.breath_rate_bpm,
        frequency_hz: args.frequency_hz,
        depth_factor: args.depth,
        lag_s: args.lag_sec,
        noise_sd: args.noise_sd,
        rng_seed: args.seed,
        tachogram_baseline_ms: args.baseline_ms,
        tachogram_gain_ms: args.gain_ms,
    };
    let record: BivariateRecord<f64> = generate(&spec)?;
    let out = OutputSet::new(args.output.out_dir.clone(), args.output.prefix.clone())?;
    let pair_path = out.path("pair.csv");
    write_bivariate_csv(&record, &pair_path)?;
    let settings = serde_json::to_value(&spec).map_err(|e| CliError::Io(e.to_string()))?;
    let mut manifest = RunManifest::new("synth", echo, settings, !args.output.no_timestamp);
    manifest.add_output(&pair_path)?;
    manifest.write(&out.manifest_path())?;
    Ok(())
}

fn report_cmd(args: &ReportArgs, echo: Vec<String>) -> Result<(), CliError> {
    let files = args
        .inputs
        .iter()
        .map(|p| {
            if p.exists() {
                read_stability_file(p).map_err(CliError::Invalid)
            } else {
                Err(CliError::Io(format!("{}: no such file", p.display())))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = OutputSet::new(args.output.out_dir.clone(), args.output.prefix.clone())?;
    let report_path = out.path("report.csv");
    std::fs::write(&report_path, summarize(&files))?;
    let mut manifest = RunManifest::new("report", echo, json!({}), !args.output.no_timestamp);
    for p in &args.inputs {
        manifest.add_input(p)?;
    }
    manifest.add_output(&report_path)?;
    manifest.write(&out.manifest_path())?;
    Ok(())
}
