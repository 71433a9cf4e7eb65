//! Recursive (biquad) filters applied forward-backward for zero phase.

use std::f64::consts::PI;

use crate::scalar::Scalar;
use crate::types::TimeSeries;

use super::PreprocessError;

/// Second-order section, normalized so `a0 = 1`, run in transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    b: [T; 3],
    a: [T; 2],
}

impl<T: Scalar> Biquad<T> {
    fn from_f64(b: [f64; 3], a0: f64, a: [f64; 2]) -> Self {
        Self {
            b: b.map(|v| T::lit(v / a0)),
            a: a.map(|v| T::lit(v / a0)),
        }
    }

    /// Bilinear-transform low-pass with quality factor `q`.
    pub fn lowpass(cutoff_hz: f64, rate_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / rate_hz;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_f64(
            [(1.0 - c) / 2.0, 1.0 - c, (1.0 - c) / 2.0],
            1.0 + alpha,
            [-2.0 * c, 1.0 - alpha],
        )
    }

    /// Bilinear-transform high-pass with quality factor `q`.
    pub fn highpass(cutoff_hz: f64, rate_hz: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / rate_hz;
        let (s, c) = w0.sin_cos();
        let alpha = s / (2.0 * q);
        Self::from_f64(
            [(1.0 + c) / 2.0, -(1.0 + c), (1.0 + c) / 2.0],
            1.0 + alpha,
            [-2.0 * c, 1.0 - alpha],
        )
    }

    fn dc_gain(&self) -> T {
        (self.b[0] + self.b[1] + self.b[2]) / (T::one() + self.a[0] + self.a[1])
    }

    /// Filters in place, starting from the steady state for a constant
    /// input equal to `x[0]`.
    fn run(&self, x: &mut [T]) {
        let Some(&x0) = x.first() else { return };
        let y0 = self.dc_gain() * x0;
        let mut s2 = self.b[2] * x0 - self.a[1] * y0;
        let mut s1 = self.b[1] * x0 - self.a[0] * y0 + s2;
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Fourth-order Butterworth low-pass as two biquads.
pub fn butterworth4_lowpass<T: Scalar>(cutoff_hz: f64, rate_hz: f64) -> [Biquad<T>; 2] {
    let q1 = 1.0 / (2.0 * (PI / 8.0).cos());
    let q2 = 1.0 / (2.0 * (3.0 * PI / 8.0).cos());
    [
        Biquad::lowpass(cutoff_hz, rate_hz, q1),
        Biquad::lowpass(cutoff_hz, rate_hz, q2),
    ]
}

/// Zero-phase filtering: the cascade runs forward, then backward, over the
/// signal extended at both ends by odd reflection.
pub fn filtfilt<T: Scalar>(sections: &[Biquad<T>], x: &[T]) -> Vec<T> {
    let n = x.len();
    if n < 2 || sections.is_empty() {
        return x.to_vec();
    }
    let pad = (3 * (2 * sections.len() + 1)).min(n - 1);
    let two = T::lit(2.0);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| two * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| two * x[n - 1] - x[n - 1 - i]));

    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    for s in sections {
        s.run(&mut ext);
    }
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Low-passes at 0.4 × the output Nyquist frequency (4th-order Butterworth,
/// zero phase) and keeps every `factor`-th sample.
pub fn decimate<T: Scalar>(
    ts: &TimeSeries<T>,
    factor: usize,
) -> Result<TimeSeries<T>, PreprocessError> {
    if factor == 0 {
        return Err(PreprocessError::BadFactor(factor));
    }
    if factor == 1 {
        return Ok(ts.clone());
    }
    let out_rate = ts.sample_rate_hz() / factor as f64;
    let cutoff = 0.4 * out_rate / 2.0;
    let filtered = filtfilt(
        &butterworth4_lowpass(cutoff, ts.sample_rate_hz()),
        ts.values(),
    );
    let kept: Vec<T> = filtered.into_iter().step_by(factor).collect();
    Ok(TimeSeries::new(kept, out_rate, ts.start_time_s())?)
}
