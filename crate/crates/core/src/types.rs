//! Domain types shared across the analysis pipeline.
//!
//! Shifts, segment lengths and steps are integer sample counts everywhere
//! inside the crate; seconds and milliseconds only appear at the I/O edge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Relative tolerance used when checking that a duration in seconds lands on
/// the sample grid, or that two sample rates agree.
pub const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("sample rate must be finite and positive, got {0}")]
    InvalidSampleRate(f64),
    #[error("time series must contain at least one sample")]
    EmptySeries,
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("start time must be finite, got {0}")]
    InvalidStartTime(f64),
    #[error("RateMismatch: signals are sampled at {0} Hz and {1} Hz")]
    RateMismatch(f64, f64),
    #[error("signals start at different times ({0} s vs {1} s)")]
    MisalignedStart(f64, f64),
    #[error("SegmentTooLong: segment of {segment} samples exceeds signal of {signal} samples")]
    SegmentTooLong { segment: usize, signal: usize },
    #[error("segment of {segment} samples is too short, need at least {min}")]
    SegmentTooShort { segment: usize, min: usize },
    #[error("EmptyShiftRange: shift_min {min} is greater than shift_max {max}")]
    EmptyShiftRange { min: i64, max: i64 },
    #[error("BadThreshold: {value} is not valid for method {method}")]
    BadThreshold { method: Method, value: f64 },
    #[error("{0} must be a positive number of samples")]
    ZeroStep(&'static str),
    #[error("no window/shift combination keeps both segments inside the signals")]
    NoOverlap,
    #[error("{seconds} s is not a whole number of samples at {rate} Hz")]
    OffGrid { seconds: f64, rate: f64 },
    #[error("{0}")]
    Inconsistent(String),
}

/// Scoring approach for each (window, shift) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Linear modeling: adjusted R² of a simple regression, higher is better.
    Lm,
    /// Time-series distance, lower is better.
    Td,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Lm => "LM",
            Method::Td => "TD",
        })
    }
}

/// Distance kernel used by [`Method::Td`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[non_exhaustive]
pub enum DistanceKind {
    Manhattan,
    Fourier,
}

/// Per-segment standardization applied before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    None = 0,
    /// Min-max mapping onto [0, 1].
    Uniform = 1,
    /// Zero mean, unit sample standard deviation.
    Gaussian = 2,
}

/// Converts a duration in seconds to a whole number of samples, refusing
/// anything that does not land on the sample grid.
pub fn seconds_to_samples(seconds: f64, sample_rate_hz: f64) -> Result<i64, ValidationError> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(ValidationError::InvalidSampleRate(sample_rate_hz));
    }
    let exact = seconds * sample_rate_hz;
    let rounded = exact.round();
    if !exact.is_finite() || (exact - rounded).abs() > GRID_TOLERANCE * rounded.abs().max(1.0) {
        return Err(ValidationError::OffGrid {
            seconds,
            rate: sample_rate_hz,
        });
    }
    Ok(rounded as i64)
}

fn check_rate(rate: f64) -> Result<(), ValidationError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(ValidationError::InvalidSampleRate(rate))
    }
}

/// Uniformly sampled scalar signal.
///
/// Sample `i` sits at `start_time_s + i / sample_rate_hz`; no per-sample
/// timestamps are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
    sample_rate_hz: f64,
    start_time_s: f64,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(
        values: Vec<T>,
        sample_rate_hz: f64,
        start_time_s: f64,
    ) -> Result<Self, ValidationError> {
        check_rate(sample_rate_hz)?;
        if !start_time_s.is_finite() {
            return Err(ValidationError::InvalidStartTime(start_time_s));
        }
        if values.is_empty() {
            return Err(ValidationError::EmptySeries);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ValidationError::NonFiniteSample(i));
        }
        Ok(Self {
            values,
            sample_rate_hz,
            start_time_s,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always `false`; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    /// Time of sample `i` in seconds.
    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time_s + i as f64 / self.sample_rate_hz
    }

    /// Nearest sample index for a time, if it falls inside the series.
    pub fn index_of(&self, time_s: f64) -> Option<usize> {
        let pos = ((time_s - self.start_time_s) * self.sample_rate_hz).round();
        (pos >= 0.0 && pos < self.values.len() as f64).then_some(pos as usize)
    }

    /// Length in seconds, counting one sample period per sample.
    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate_hz
    }
}

/// Two signals on a common sample grid. `signal1` stays fixed during the
/// analysis and `signal2` is the one being shifted.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateRecord<T> {
    signal1: TimeSeries<T>,
    signal2: TimeSeries<T>,
    labels: [String; 2],
}

impl<T: Scalar> BivariateRecord<T> {
    pub fn new(
        signal1: TimeSeries<T>,
        signal2: TimeSeries<T>,
        labels: [String; 2],
    ) -> Result<Self, ValidationError> {
        let (r1, r2) = (signal1.sample_rate_hz, signal2.sample_rate_hz);
        if (r1 - r2).abs() > 1e-9 * r1.max(r2) {
            return Err(ValidationError::RateMismatch(r1, r2));
        }
        if (signal1.start_time_s - signal2.start_time_s).abs() * r1 > GRID_TOLERANCE {
            return Err(ValidationError::MisalignedStart(
                signal1.start_time_s,
                signal2.start_time_s,
            ));
        }
        Ok(Self {
            signal1,
            signal2,
            labels,
        })
    }

    pub fn signal1(&self) -> &TimeSeries<T> {
        &self.signal1
    }

    pub fn signal2(&self) -> &TimeSeries<T> {
        &self.signal2
    }

    pub fn labels(&self) -> &[String; 2] {
        &self.labels
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.signal1.sample_rate_hz
    }

    /// Same record with the roles of the two signals exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            signal1: self.signal2.clone(),
            signal2: self.signal1.clone(),
            labels: [self.labels[1].clone(), self.labels[0].clone()],
        }
    }
}

/// Full parameter set of one analysis run, in samples.
///
/// Built through [`AnalysisConfig::builder`]; record-independent invariants
/// are enforced at build time, the rest by [`validate_config`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    method: Method,
    distance: DistanceKind,
    scaling: Scaling,
    segment_len_samples: usize,
    shift_min_samples: i64,
    shift_max_samples: i64,
    shift_step_samples: usize,
    window_step_samples: usize,
    threshold: Option<f64>,
    stable_tolerance_steps: usize,
}

impl AnalysisConfig {
    /// Builder preloaded with TD-Manhattan, Gaussian scaling, 250-sample
    /// segments and shifts -50..=50 (10 s and ±2 s at 25 Hz), unit steps,
    /// no threshold.
    pub fn builder() -> AnalysisConfigBuilder {
        AnalysisConfigBuilder {
            config: AnalysisConfig {
                method: Method::Td,
                distance: DistanceKind::Manhattan,
                scaling: Scaling::Gaussian,
                segment_len_samples: 250,
                shift_min_samples: -50,
                shift_max_samples: 50,
                shift_step_samples: 1,
                window_step_samples: 1,
                threshold: None,
                stable_tolerance_steps: 1,
            },
        }
    }

    /// Default bundle for a given rate: Gaussian scaling, 10 s segments,
    /// shifts from -2 s to +2 s, unit steps, no threshold.
    pub fn defaults_for_rate(sample_rate_hz: f64) -> Result<Self, ValidationError> {
        let segment = seconds_to_samples(10.0, sample_rate_hz)?;
        let shift = seconds_to_samples(2.0, sample_rate_hz)?;
        Self::builder()
            .segment_len_samples(segment as usize)
            .shift_range_samples(-shift, shift)
            .build()
    }

    pub fn method(&self) -> Method {
        self.method
    }
    pub fn distance(&self) -> DistanceKind {
        self.distance
    }
    pub fn scaling(&self) -> Scaling {
        self.scaling
    }
    pub fn segment_len_samples(&self) -> usize {
        self.segment_len_samples
    }
    pub fn shift_min_samples(&self) -> i64 {
        self.shift_min_samples
    }
    pub fn shift_max_samples(&self) -> i64 {
        self.shift_max_samples
    }
    pub fn shift_step_samples(&self) -> usize {
        self.shift_step_samples
    }
    pub fn window_step_samples(&self) -> usize {
        self.window_step_samples
    }
    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }
    /// Maximum deviation, in shift steps, still counted as the same stable run.
    pub fn stable_tolerance_steps(&self) -> usize {
        self.stable_tolerance_steps
    }

    /// Every shift on the grid, ascending.
    pub fn shift_grid(&self) -> Vec<i64> {
        (self.shift_min_samples..=self.shift_max_samples)
            .step_by(self.shift_step_samples)
            .collect()
    }

    /// Same config with a different (or no) threshold.
    pub fn with_threshold(&self, threshold: Option<f64>) -> Result<Self, ValidationError> {
        let mut next = self.clone();
        next.threshold = threshold;
        next.check()?;
        Ok(next)
    }

    fn check(&self) -> Result<(), ValidationError> {
        if self.shift_min_samples > self.shift_max_samples {
            return Err(ValidationError::EmptyShiftRange {
                min: self.shift_min_samples,
                max: self.shift_max_samples,
            });
        }
        if self.shift_step_samples == 0 {
            return Err(ValidationError::ZeroStep("shift_step_samples"));
        }
        if self.window_step_samples == 0 {
            return Err(ValidationError::ZeroStep("window_step_samples"));
        }
        let min_len = self.min_segment_len();
        if self.segment_len_samples < min_len {
            return Err(ValidationError::SegmentTooShort {
                segment: self.segment_len_samples,
                min: min_len,
            });
        }
        if let Some(t) = self.threshold {
            let ok = match self.method {
                Method::Lm => (0.0..=1.0).contains(&t),
                Method::Td => t.is_finite() && t > 0.0,
            };
            if !ok {
                return Err(ValidationError::BadThreshold {
                    method: self.method,
                    value: t,
                });
            }
        }
        Ok(())
    }

    fn min_segment_len(&self) -> usize {
        match (self.method, self.scaling) {
            (Method::Lm, _) => 3,
            (_, Scaling::Uniform | Scaling::Gaussian) => 2,
            (Method::Td, Scaling::None) => match self.distance {
                DistanceKind::Fourier => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisConfigBuilder {
    config: AnalysisConfig,
}

impl AnalysisConfigBuilder {
    pub fn method(mut self, method: Method) -> Self {
        self.config.method = method;
        self
    }
    pub fn distance(mut self, distance: DistanceKind) -> Self {
        self.config.distance = distance;
        self
    }
    pub fn scaling(mut self, scaling: Scaling) -> Self {
        self.config.scaling = scaling;
        self
    }
    pub fn segment_len_samples(mut self, len: usize) -> Self {
        self.config.segment_len_samples = len;
        self
    }
    pub fn shift_range_samples(mut self, min: i64, max: i64) -> Self {
        self.config.shift_min_samples = min;
        self.config.shift_max_samples = max;
        self
    }
    pub fn shift_step_samples(mut self, step: usize) -> Self {
        self.config.shift_step_samples = step;
        self
    }
    pub fn window_step_samples(mut self, step: usize) -> Self {
        self.config.window_step_samples = step;
        self
    }
    pub fn threshold(mut self, threshold: Option<f64>) -> Self {
        self.config.threshold = threshold;
        self
    }
    pub fn stable_tolerance_steps(mut self, steps: usize) -> Self {
        self.config.stable_tolerance_steps = steps;
        self
    }

    pub fn build(self) -> Result<AnalysisConfig, ValidationError> {
        self.config.check()?;
        Ok(self.config)
    }
}

/// Checks a config against the record it will run on. Returns the config
/// unchanged when every constraint holds.
pub fn validate_config<'a, T: Scalar>(
    config: &'a AnalysisConfig,
    record: &BivariateRecord<T>,
) -> Result<&'a AnalysisConfig, ValidationError> {
    config.check()?;
    let (r1, r2) = (record.signal1.sample_rate_hz, record.signal2.sample_rate_hz);
    if (r1 - r2).abs() > 1e-9 * r1.max(r2) {
        return Err(ValidationError::RateMismatch(r1, r2));
    }
    let seg = config.segment_len_samples;
    for signal in [&record.signal1, &record.signal2] {
        if seg > signal.len() {
            return Err(ValidationError::SegmentTooLong {
                segment: seg,
                signal: signal.len(),
            });
        }
    }
    if !has_overlap(config, record.signal1.len(), record.signal2.len()) {
        return Err(ValidationError::NoOverlap);
    }
    Ok(config)
}

fn has_overlap(config: &AnalysisConfig, len1: usize, len2: usize) -> bool {
    let seg = config.segment_len_samples as i64;
    let last_window = len1 as i64 - seg;
    let last_pos = len2 as i64 - seg;
    let wstep = config.window_step_samples as i64;
    config.shift_grid().into_iter().any(|s| {
        // smallest window start t on the window grid with t + s >= 0
        let lo = (-s).max(0);
        let t = (lo + wstep - 1) / wstep * wstep;
        t <= last_window && t + s <= last_pos
    })
}

/// Score grid over (window start × shift). Undefined cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalOrderMatrix<T> {
    scores: Vec<Option<T>>,
    window_starts: Vec<usize>,
    shifts: Vec<i64>,
    sample_rate_hz: f64,
    start_time_s: f64,
    method: Method,
    distance: DistanceKind,
}

impl<T: Scalar> TemporalOrderMatrix<T> {
    /// Assembles a matrix from row-major scores, checking every invariant:
    /// constant strictly increasing grids, LM scores ≤ 1, TD scores ≥ 0.
    pub fn from_parts(
        scores: Vec<Option<T>>,
        window_starts: Vec<usize>,
        shifts: Vec<i64>,
        sample_rate_hz: f64,
        start_time_s: f64,
        method: Method,
        distance: DistanceKind,
    ) -> Result<Self, ValidationError> {
        check_rate(sample_rate_hz)?;
        if scores.len() != window_starts.len() * shifts.len() {
            return Err(ValidationError::Inconsistent(format!(
                "{} scores for a {}x{} grid",
                scores.len(),
                window_starts.len(),
                shifts.len()
            )));
        }
        let ws: Vec<i64> = window_starts.iter().map(|&w| w as i64).collect();
        if !constant_increasing(&ws) || !constant_increasing(&shifts) {
            return Err(ValidationError::Inconsistent(
                "grid axes must be strictly increasing with a constant step".into(),
            ));
        }
        for s in scores.iter().flatten() {
            let v = s.as_f64();
            let ok = v.is_finite()
                && match method {
                    Method::Lm => v <= 1.0,
                    Method::Td => v >= 0.0,
                };
            if !ok {
                return Err(ValidationError::Inconsistent(format!(
                    "score {v} is out of range for method {method}"
                )));
            }
        }
        Ok(Self {
            scores,
            window_starts,
            shifts,
            sample_rate_hz,
            start_time_s,
            method,
            distance,
        })
    }

    pub fn n_windows(&self) -> usize {
        self.window_starts.len()
    }
    pub fn n_shifts(&self) -> usize {
        self.shifts.len()
    }
    pub fn method(&self) -> Method {
        self.method
    }
    pub fn distance(&self) -> DistanceKind {
        self.distance
    }
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }
    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }
    /// Window start sample indices (relative to signal1's first sample).
    pub fn window_starts(&self) -> &[usize] {
        &self.window_starts
    }
    pub fn shift_samples(&self) -> &[i64] {
        &self.shifts
    }
    pub fn window_start_times_s(&self) -> Vec<f64> {
        self.window_starts
            .iter()
            .map(|&w| self.start_time_s + w as f64 / self.sample_rate_hz)
            .collect()
    }
    pub fn shifts_s(&self) -> Vec<f64> {
        self.shifts
            .iter()
            .map(|&s| s as f64 / self.sample_rate_hz)
            .collect()
    }
    pub fn get(&self, window: usize, shift: usize) -> Option<T> {
        self.scores[window * self.shifts.len() + shift]
    }
    pub fn row(&self, window: usize) -> &[Option<T>] {
        let k = self.shifts.len();
        &self.scores[window * k..(window + 1) * k]
    }
    pub fn rows(&self) -> impl Iterator<Item = &[Option<T>]> {
        self.scores.chunks(self.shifts.len().max(1))
    }
    pub fn scores(&self) -> &[Option<T>] {
        &self.scores
    }
}

fn constant_increasing(xs: &[i64]) -> bool {
    match xs {
        [] | [_] => true,
        [a, b, ..] => {
            let step = b - a;
            step > 0 && xs.windows(2).all(|w| w[1] - w[0] == step)
        }
    }
}

/// Best shift per window, in samples; `None` where no cell qualified.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalVector {
    shifts: Vec<Option<i64>>,
    window_start_times_s: Vec<f64>,
    sample_rate_hz: f64,
}

impl CausalVector {
    pub fn new(
        shifts: Vec<Option<i64>>,
        window_start_times_s: Vec<f64>,
        sample_rate_hz: f64,
    ) -> Result<Self, ValidationError> {
        check_rate(sample_rate_hz)?;
        if shifts.len() != window_start_times_s.len() {
            return Err(ValidationError::Inconsistent(format!(
                "{} entries for {} windows",
                shifts.len(),
                window_start_times_s.len()
            )));
        }
        Ok(Self {
            shifts,
            window_start_times_s,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }
    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }
    pub fn shift_samples(&self) -> &[Option<i64>] {
        &self.shifts
    }
    pub fn window_start_times_s(&self) -> &[f64] {
        &self.window_start_times_s
    }
    pub fn entries_s(&self) -> Vec<Option<f64>> {
        self.shifts
            .iter()
            .map(|s| s.map(|s| s as f64 / self.sample_rate_hz))
            .collect()
    }
    pub fn entries_ms(&self) -> Vec<Option<f64>> {
        self.shifts
            .iter()
            .map(|s| s.map(|s| s as f64 * 1000.0 / self.sample_rate_hz))
            .collect()
    }
    pub fn defined_count(&self) -> usize {
        self.shifts.iter().flatten().count()
    }
}

/// One maximal run of near-constant causal-vector entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableRun {
    pub start_time_s: f64,
    pub duration_s: f64,
    /// Value of the run's first entry.
    pub shift_ms: f64,
}

/// Summary statistics of a causal vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StabilityReportRepr")]
pub struct StabilityReport {
    mean_shift_ms: Option<f64>,
    sd_shift_ms: Option<f64>,
    longest_stable_run_s: f64,
    defined_ratio_percent: f64,
    stable_runs: Vec<StableRun>,
    mean_run_duration_ms: f64,
}

#[derive(Deserialize)]
struct StabilityReportRepr {
    mean_shift_ms: Option<f64>,
    sd_shift_ms: Option<f64>,
    longest_stable_run_s: f64,
    defined_ratio_percent: f64,
    stable_runs: Vec<StableRun>,
    mean_run_duration_ms: f64,
}

impl TryFrom<StabilityReportRepr> for StabilityReport {
    type Error = ValidationError;

    fn try_from(r: StabilityReportRepr) -> Result<Self, Self::Error> {
        let report = Self::new(
            r.mean_shift_ms,
            r.sd_shift_ms,
            r.defined_ratio_percent,
            r.stable_runs,
            r.mean_run_duration_ms,
        )?;
        if report.longest_stable_run_s != r.longest_stable_run_s {
            return Err(ValidationError::Inconsistent(format!(
                "longest run {} s does not match runs ({} s)",
                r.longest_stable_run_s, report.longest_stable_run_s
            )));
        }
        Ok(report)
    }
}

impl StabilityReport {
    /// `longest_stable_run_s` is derived from the runs.
    pub fn new(
        mean_shift_ms: Option<f64>,
        sd_shift_ms: Option<f64>,
        defined_ratio_percent: f64,
        stable_runs: Vec<StableRun>,
        mean_run_duration_ms: f64,
    ) -> Result<Self, ValidationError> {
        if !(0.0..=100.0).contains(&defined_ratio_percent) {
            return Err(ValidationError::Inconsistent(format!(
                "defined ratio {defined_ratio_percent}% outside [0, 100]"
            )));
        }
        let longest_stable_run_s = stable_runs.iter().map(|r| r.duration_s).fold(0.0, f64::max);
        Ok(Self {
            mean_shift_ms,
            sd_shift_ms,
            longest_stable_run_s,
            defined_ratio_percent,
            stable_runs,
            mean_run_duration_ms,
        })
    }

    pub fn mean_shift_ms(&self) -> Option<f64> {
        self.mean_shift_ms
    }
    pub fn sd_shift_ms(&self) -> Option<f64> {
        self.sd_shift_ms
    }
    pub fn longest_stable_run_s(&self) -> f64 {
        self.longest_stable_run_s
    }
    pub fn defined_ratio_percent(&self) -> f64 {
        self.defined_ratio_percent
    }
    pub fn stable_runs(&self) -> &[StableRun] {
        &self.stable_runs
    }
    pub fn mean_run_duration_ms(&self) -> f64 {
        self.mean_run_duration_ms
    }
}
