use crate::scalar::Scalar;
use crate::types::TimeSeries;

use super::PreprocessError;

/// Shortest RR interval kept when building a tachogram.
pub const RR_MIN_S: f64 = 0.2;
/// Longest RR interval kept when building a tachogram.
pub const RR_MAX_S: f64 = 3.0;

/// R-peak instants in seconds, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatTimes {
    times_s: Vec<f64>,
}

impl BeatTimes {
    pub fn new(times_s: Vec<f64>) -> Result<Self, PreprocessError> {
        let ok = times_s.iter().all(|t| t.is_finite()) && times_s.windows(2).all(|w| w[1] > w[0]);
        if ok {
            Ok(Self { times_s })
        } else {
            Err(PreprocessError::BeatsNotIncreasing)
        }
    }

    pub fn times_s(&self) -> &[f64] {
        &self.times_s
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    /// Successive differences, in seconds.
    pub fn rr_intervals_s(&self) -> Vec<f64> {
        self.times_s.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Piecewise-linear RR curve in milliseconds over `[first beat, last beat]`.
///
/// Each beat carries the interval that ends at it. Intervals outside
/// [`RR_MIN_S`, `RR_MAX_S`] are dropped. The first beat has no interval of
/// its own and, like any stretch before the first or after the last kept
/// node, holds the nearest kept value.
#[derive(Debug, Clone, PartialEq)]
pub struct RrCurve {
    nodes: Vec<(f64, f64)>,
    start_s: f64,
    end_s: f64,
}

impl RrCurve {
    pub fn new(beats: &BeatTimes) -> Result<Self, PreprocessError> {
        let t = beats.times_s();
        if t.len() < 2 {
            return Err(PreprocessError::TooFewBeats(t.len()));
        }
        let nodes: Vec<(f64, f64)> = t
            .windows(2)
            .filter_map(|w| {
                let rr = w[1] - w[0];
                (RR_MIN_S..=RR_MAX_S)
                    .contains(&rr)
                    .then_some((w[1], rr * 1000.0))
            })
            .collect();
        if nodes.is_empty() {
            return Err(PreprocessError::TooFewBeats(0));
        }
        Ok(Self {
            nodes,
            start_s: t[0],
            end_s: t[t.len() - 1],
        })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    /// RR value (ms) at `time_s`; `None` outside the beat span.
    pub fn evaluate(&self, time_s: f64) -> Option<f64> {
        if time_s < self.start_s || time_s > self.end_s {
            return None;
        }
        let idx = self.nodes.partition_point(|&(t, _)| t <= time_s);
        Some(self.between(idx, time_s))
    }

    fn between(&self, idx: usize, time_s: f64) -> f64 {
        // idx = number of nodes at or before time_s
        if idx == 0 {
            return self.nodes[0].1;
        }
        if idx == self.nodes.len() {
            return self.nodes[idx - 1].1;
        }
        let (t0, v0) = self.nodes[idx - 1];
        let (t1, v1) = self.nodes[idx];
        v0 + (v1 - v0) * (time_s - t0) / (t1 - t0)
    }

    /// Samples the curve on a uniform grid starting at `start_s`; grid
    /// points past the last beat are not produced.
    pub fn sample<T: Scalar>(
        &self,
        start_s: f64,
        rate_hz: f64,
    ) -> Result<TimeSeries<T>, PreprocessError> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(PreprocessError::BadTargetRate(rate_hz));
        }
        let mut values = Vec::new();
        let mut first = None;
        let mut idx = 0;
        let mut k = 0usize;
        loop {
            let grid_t = start_s + k as f64 / rate_hz;
            if grid_t > self.end_s + 1e-9 / rate_hz {
                break;
            }
            let t = grid_t.min(self.end_s);
            if t >= self.start_s - 1e-9 / rate_hz {
                let t = t.max(self.start_s);
                while idx < self.nodes.len() && self.nodes[idx].0 <= t {
                    idx += 1;
                }
                first.get_or_insert(grid_t);
                values.push(T::lit(self.between(idx, t)));
            }
            k += 1;
        }
        let Some(first) = first else {
            return Err(PreprocessError::TooFewBeats(0));
        };
        Ok(TimeSeries::new(values, rate_hz, first)?)
    }
}

/// Uniformly resampled RR-interval series (ms) spanning first to last beat.
pub fn build_tachogram<T: Scalar>(
    beats: &BeatTimes,
    target_rate_hz: f64,
) -> Result<TimeSeries<T>, PreprocessError> {
    let curve = RrCurve::new(beats)?;
    curve.sample(curve.start_s(), target_rate_hz)
}
