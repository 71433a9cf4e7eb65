//! Synthetic bivariate recordings with a known lag.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::types::{BivariateRecord, TimeSeries, ValidationError};

/// A lag is on the sample grid when it is within this many seconds of one.
const LAG_GRID_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("lag {lag_s} s is not a multiple of the sample period at {rate_hz} Hz")]
    OffGridLag { lag_s: f64, rate_hz: f64 },
    #[error("invalid synthesis parameter: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Two sines, the second a delayed copy of the first.
    LaggedSine,
    /// A respiratory-modulated tachogram (signal1) and tidal volume (signal2).
    RsaPair,
}

/// Parameters for [`generate`].
///
/// A positive `lag_s` makes signal1 precede signal2 by that amount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub breath_rate_bpm: f64,
    /// Overrides `breath_rate_bpm / 60` for the lagged sine.
    pub frequency_hz: Option<f64>,
    /// Tidal-volume amplitude.
    pub depth_factor: f64,
    pub lag_s: f64,
    pub noise_sd: f64,
    pub rng_seed: u64,
    pub tachogram_baseline_ms: f64,
    pub tachogram_gain_ms: f64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind) -> Self {
        Self {
            kind,
            duration_s: 120.0,
            sample_rate_hz: 25.0,
            breath_rate_bpm: 6.0,
            frequency_hz: None,
            depth_factor: 1.0,
            lag_s: 0.0,
            noise_sd: 0.0,
            rng_seed: 0,
            tachogram_baseline_ms: 1000.0,
            tachogram_gain_ms: 50.0,
        }
    }

    fn frequency(&self) -> f64 {
        self.frequency_hz.unwrap_or(self.breath_rate_bpm / 60.0)
    }

    fn check(&self) -> Result<usize, SynthError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(SynthError::InvalidSpec(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("duration_s", self.duration_s)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("frequency", self.frequency())?;
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(SynthError::InvalidSpec(format!(
                "noise_sd {} must be >= 0",
                self.noise_sd
            )));
        }
        for (name, v) in [
            ("depth_factor", self.depth_factor),
            ("lag_s", self.lag_s),
            ("tachogram_baseline_ms", self.tachogram_baseline_ms),
            ("tachogram_gain_ms", self.tachogram_gain_ms),
        ] {
            if !v.is_finite() {
                return Err(SynthError::InvalidSpec(format!("{name} must be finite")));
            }
        }
        let n = (self.duration_s * self.sample_rate_hz).round() as usize;
        if n == 0 {
            return Err(SynthError::InvalidSpec(
                "duration shorter than one sample".into(),
            ));
        }
        Ok(n)
    }
}

struct Noise {
    rng: ChaCha8Rng,
    dist: Normal<f64>,
}

impl Noise {
    fn new(sd: f64, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dist: Normal::new(0.0, sd).expect("sd checked"),
        }
    }

    fn series(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.dist.sample(&mut self.rng)).collect()
    }
}

fn pair<T: Scalar>(
    s1: Vec<f64>,
    s2: Vec<f64>,
    rate: f64,
    labels: [&str; 2],
) -> Result<BivariateRecord<T>, SynthError> {
    let series = |v: Vec<f64>| TimeSeries::new(v.into_iter().map(T::lit).collect(), rate, 0.0);
    Ok(BivariateRecord::new(
        series(s1)?,
        series(s2)?,
        labels.map(String::from),
    )?)
}

/// `sin(2πft) + e1` and `sin(2πf(t − lag)) + e2`, labelled `signal1`/`signal2`.
/// The lag must fall on the sample grid.
pub fn gen_lagged_sine<T: Scalar>(spec: &SynthSpec) -> Result<BivariateRecord<T>, SynthError> {
    let n = spec.check()?;
    let rate = spec.sample_rate_hz;
    let on_grid = (spec.lag_s * rate).round() / rate;
    if (spec.lag_s - on_grid).abs() > LAG_GRID_TOLERANCE_S {
        return Err(SynthError::OffGridLag {
            lag_s: spec.lag_s,
            rate_hz: rate,
        });
    }
    let f = spec.frequency();
    let mut noise = Noise::new(spec.noise_sd, spec.rng_seed);
    let (e1, e2) = (noise.series(n), noise.series(n));
    let t = |i: usize| i as f64 / rate;
    let s1 = (0..n)
        .map(|i| (2.0 * PI * f * t(i)).sin() + e1[i])
        .collect();
    let s2 = (0..n)
        .map(|i| (2.0 * PI * f * (t(i) - spec.lag_s)).sin() + e2[i])
        .collect();
    pair(s1, s2, rate, ["signal1", "signal2"])
}

/// Tachogram `baseline + gain·sin(2πr(t + lag)) + noise` (ms) as signal1 and
/// tidal volume `depth·sin(2πrt)` as signal2, `r` being the breathing rate.
pub fn gen_rsa_pair<T: Scalar>(spec: &SynthSpec) -> Result<BivariateRecord<T>, SynthError> {
    let n = spec.check()?;
    let rate = spec.sample_rate_hz;
    let f = spec.frequency();
    let mut noise = Noise::new(spec.noise_sd, spec.rng_seed);
    let e = noise.series(n);
    let t = |i: usize| i as f64 / rate;
    let tach = (0..n)
        .map(|i| {
            spec.tachogram_baseline_ms
                + spec.tachogram_gain_ms * (2.0 * PI * f * (t(i) + spec.lag_s)).sin()
                + e[i]
        })
        .collect();
    let tidal = (0..n)
        .map(|i| spec.depth_factor * (2.0 * PI * f * t(i)).sin())
        .collect();
    pair(tach, tidal, rate, ["tachogram", "tidal_volume"])
}

pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<BivariateRecord<T>, SynthError> {
    match spec.kind {
        SynthKind::LaggedSine => gen_lagged_sine(spec),
        SynthKind::RsaPair => gen_rsa_pair(spec),
    }
}
