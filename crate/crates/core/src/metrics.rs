//! Cell scores: adjusted R² (LM) and time-series distances (TD).
//!
//! Every score is split into a per-segment `prepare` step and a pairwise
//! `score` step. The engine caches prepared segments; the free functions
//! below run both steps on the spot, so a matrix cell is bit-identical to
//! calling the matching function on the two (scaled) segments.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("segments differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("segment of length {len} is too short, need {min}")]
    TooShort { len: usize, min: usize },
    #[error("constant segment")]
    Degenerate,
    #[error("DegenerateX: regressor segment is constant")]
    DegenerateX,
    #[error("DegenerateY: response segment is constant")]
    DegenerateY,
}

/// A pairwise segment score with a cacheable per-segment stage.
pub trait SegmentKernel<T: Scalar>: Send + Sync {
    type Prepared: Send + Sync;

    /// Shortest segment the kernel accepts.
    const MIN_LEN: usize;

    /// Higher scores are better (LM) when `true`, lower (TD) otherwise.
    const MAXIMIZE: bool;

    fn prepare(&self, segment: &[T]) -> Result<Self::Prepared, MetricError>;

    /// Scores two prepared segments of equal length.
    fn score(&self, a: &Self::Prepared, b: &Self::Prepared) -> T;
}

fn is_constant<T: Scalar>(xs: &[T]) -> bool {
    xs.iter().all(|&v| v == xs[0])
}

/// Simple least-squares regression of the second segment on the first,
/// scored by adjusted R² with one predictor.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdjustedRSquared;

#[derive(Debug, Clone)]
pub struct Centered<T> {
    deviations: Vec<T>,
    sum_sq: T,
}

impl<T: Scalar> SegmentKernel<T> for AdjustedRSquared {
    type Prepared = Centered<T>;
    const MIN_LEN: usize = 3;
    const MAXIMIZE: bool = true;

    fn prepare(&self, segment: &[T]) -> Result<Centered<T>, MetricError> {
        if segment.len() < 3 {
            return Err(MetricError::TooShort {
                len: segment.len(),
                min: 3,
            });
        }
        if is_constant(segment) {
            return Err(MetricError::Degenerate);
        }
        let mean = segment.iter().copied().sum::<T>() / T::count(segment.len());
        let deviations: Vec<T> = segment.iter().map(|&v| v - mean).collect();
        let sum_sq = deviations.iter().map(|&d| d * d).sum::<T>();
        if sum_sq <= T::zero() {
            return Err(MetricError::Degenerate);
        }
        Ok(Centered { deviations, sum_sq })
    }

    fn score(&self, x: &Centered<T>, y: &Centered<T>) -> T {
        let n = x.deviations.len();
        let sxy = lane_sum(&x.deviations, &y.deviations, |a, b| a * b);
        // 1 - SSE/SST of the least-squares line, in closed form
        let r2 = (sxy * sxy / (x.sum_sq * y.sum_sq)).min(T::one());
        T::one() - (T::one() - r2) * T::count(n - 1) / T::count(n - 2)
    }
}

/// `Σ f(a[i], b[i])` accumulated in four interleaved lanes, a fixed order
/// that lets the compiler vectorize while staying reproducible.
#[inline]
fn lane_sum<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] = acc[l] + f(x[l], y[l]);
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + f(x, y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Sum of absolute elementwise differences.
#[derive(Debug, Clone, Copy, Default)]
pub struct Manhattan;

impl<T: Scalar> SegmentKernel<T> for Manhattan {
    type Prepared = Vec<T>;
    const MIN_LEN: usize = 1;
    const MAXIMIZE: bool = false;

    fn prepare(&self, segment: &[T]) -> Result<Vec<T>, MetricError> {
        if segment.is_empty() {
            return Err(MetricError::TooShort { len: 0, min: 1 });
        }
        Ok(segment.to_vec())
    }

    fn score(&self, a: &Vec<T>, b: &Vec<T>) -> T {
        lane_sum(a, b, |x, y| (x - y).abs())
    }
}

/// Euclidean distance between the non-redundant halves (`n/2 + 1`
/// coefficients) of the two segments' exact-length DFTs.
#[derive(Clone)]
pub struct Fourier<T: Scalar> {
    len: usize,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Scalar> std::fmt::Debug for Fourier<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("len", &self.len).finish()
    }
}

impl<T: Scalar> Fourier<T> {
    /// Kernel for segments of exactly `len` samples.
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len.max(1));
        Self { len, fft }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of coefficients kept per spectrum.
    pub fn kept(&self) -> usize {
        self.len / 2 + 1
    }
}

impl<T: Scalar> SegmentKernel<T> for Fourier<T> {
    type Prepared = Vec<Complex<T>>;
    const MIN_LEN: usize = 2;
    const MAXIMIZE: bool = false;

    fn prepare(&self, segment: &[T]) -> Result<Vec<Complex<T>>, MetricError> {
        if segment.len() != self.len {
            return Err(MetricError::LengthMismatch(segment.len(), self.len));
        }
        if segment.len() < 2 {
            return Err(MetricError::TooShort {
                len: segment.len(),
                min: 2,
            });
        }
        let mut buf: Vec<Complex<T>> = segment
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.kept());
        Ok(buf)
    }

    fn score(&self, a: &Vec<Complex<T>>, b: &Vec<Complex<T>>) -> T {
        a.iter()
            .zip(b)
            .map(|(&p, &q)| (p - q).norm_sqr())
            .sum::<T>()
            .sqrt()
    }
}

fn same_len<T>(x: &[T], y: &[T]) -> Result<(), MetricError> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(MetricError::LengthMismatch(x.len(), y.len()))
    }
}

/// Adjusted R² of `y = a + b·x` fitted by least squares.
///
/// Constant `x` gives [`MetricError::DegenerateX`], constant `y`
/// [`MetricError::DegenerateY`].
pub fn adjusted_r_squared<T: Scalar>(x: &[T], y: &[T]) -> Result<T, MetricError> {
    same_len(x, y)?;
    let k = AdjustedRSquared;
    let px = k.prepare(x).map_err(|e| match e {
        MetricError::Degenerate => MetricError::DegenerateX,
        other => other,
    })?;
    let py = k.prepare(y).map_err(|e| match e {
        MetricError::Degenerate => MetricError::DegenerateY,
        other => other,
    })?;
    Ok(k.score(&px, &py))
}

pub fn manhattan_distance<T: Scalar>(x: &[T], y: &[T]) -> Result<T, MetricError> {
    same_len(x, y)?;
    let k = Manhattan;
    Ok(SegmentKernel::<T>::score(
        &k,
        &k.prepare(x)?,
        &k.prepare(y)?,
    ))
}

pub fn fourier_distance<T: Scalar>(x: &[T], y: &[T]) -> Result<T, MetricError> {
    same_len(x, y)?;
    let k = Fourier::new(x.len());
    Ok(k.score(&k.prepare(x)?, &k.prepare(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_fit_scores_one() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_eq!(adjusted_r_squared(&x, &y), Ok(1.0));
    }

    #[test]
    fn hand_computed_adjusted_r_squared() {
        let r = adjusted_r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r - 0.5_f64).abs() < 1e-15, "{r}");
    }

    #[test]
    fn degenerate_regression_inputs() {
        assert_eq!(
            adjusted_r_squared(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(MetricError::DegenerateX)
        );
        assert_eq!(
            adjusted_r_squared(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]),
            Err(MetricError::DegenerateY)
        );
        assert!(matches!(
            adjusted_r_squared(&[1.0, 2.0], &[1.0, 2.0]),
            Err(MetricError::TooShort { .. })
        ));
    }

    #[test]
    fn manhattan_examples() {
        assert_eq!(manhattan_distance(&[1.0, 2.0], &[2.0, 4.0]), Ok(3.0));
        assert_eq!(
            manhattan_distance(&[0.3, -7.0, 2.5], &[0.3, -7.0, 2.5]),
            Ok(0.0)
        );
        assert_eq!(
            manhattan_distance(&[1.0], &[1.0, 2.0]),
            Err(MetricError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn fourier_of_unit_impulse() {
        let d: f64 = fourier_distance(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert!((d - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            fourier_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            Ok(0.0)
        );
        assert!(fourier_distance(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let r = adjusted_r_squared(&[1.0f32, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r - 0.5).abs() < 1e-6);
        let d = fourier_distance(&[1.0f32, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap();
        assert!((d - 3f32.sqrt()).abs() < 1e-6);
    }

    fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn adjusted_r_squared_affine_invariant(
            (x, y) in (3usize..60).prop_flat_map(|n| (vec_of(n), vec_of(n))),
            alpha in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            beta in -100.0f64..100.0,
        ) {
            let base = adjusted_r_squared(&x, &y).unwrap();
            let y2: Vec<f64> = y.iter().map(|v| alpha * v + beta).collect();
            let moved = adjusted_r_squared(&x, &y2).unwrap();
            prop_assert!((base - moved).abs() < 1e-9, "{} vs {}", base, moved);
            prop_assert!(base <= 1.0);
        }

        #[test]
        fn distances_symmetric_with_zero_self_distance(
            (x, y) in (2usize..64).prop_flat_map(|n| (vec_of(n), vec_of(n))),
        ) {
            prop_assert_eq!(manhattan_distance(&x, &y), manhattan_distance(&y, &x));
            prop_assert_eq!(manhattan_distance(&x, &x), Ok(0.0));
            let a = fourier_distance(&x, &y).unwrap();
            let b = fourier_distance(&y, &x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            prop_assert_eq!(fourier_distance(&x, &x), Ok(0.0));
        }

        #[test]
        fn manhattan_triangle_inequality(
            (x, y, z) in (1usize..64).prop_flat_map(|n| (vec_of(n), vec_of(n), vec_of(n))),
        ) {
            let xy = manhattan_distance(&x, &y).unwrap();
            let yz = manhattan_distance(&y, &z).unwrap();
            let xz = manhattan_distance(&x, &z).unwrap();
            prop_assert!(xz <= xy + yz + 1e-9);
        }

        #[test]
        fn exact_linear_relation_scores_one(
            x in proptest::collection::vec(-1000i32..1000, 3..40),
            slope in prop_oneof![-8i32..-1, 1i32..8],
            intercept in -50i32..50,
        ) {
            prop_assume!(x.iter().any(|&v| v != 0));
            // mirrored samples keep the mean at exactly zero
            let x: Vec<i32> = x.iter().copied().chain(x.iter().map(|v| -v)).collect();
            let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let yf: Vec<f64> = x.iter().map(|&v| (slope * v + intercept) as f64).collect();
            prop_assert_eq!(adjusted_r_squared(&xf, &yf), Ok(1.0));
        }

        #[test]
        fn noisy_relation_scores_below_one(
            (x, noise) in (4usize..40).prop_flat_map(|n| (vec_of(n), vec_of(n))),
        ) {
            prop_assume!(noise.iter().any(|&v| v.abs() > 1e-3));
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| 3.0 * a + e).collect();
            if let Ok(r) = adjusted_r_squared(&x, &y) {
                prop_assert!(r < 1.0);
            }
        }
    }
}
