use crate::scalar::Scalar;
use crate::types::Scaling;

use super::PreprocessError;

/// Affine standardization `x -> (x - offset) / divisor` fitted to one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams<T> {
    offset: T,
    divisor: T,
}

impl<T: Scalar> ScaleParams<T> {
    pub fn identity() -> Self {
        Self {
            offset: T::zero(),
            divisor: T::one(),
        }
    }

    /// Fits the parameters for `mode`. Constant segments cannot be
    /// standardized under `Uniform` or `Gaussian`.
    pub fn fit(segment: &[T], mode: Scaling) -> Result<Self, PreprocessError> {
        if mode == Scaling::None {
            return Ok(Self::identity());
        }
        if segment.len() < 2 {
            return Err(PreprocessError::SegmentTooShort(segment.len()));
        }
        let first = segment[0];
        if segment.iter().all(|&v| v == first) {
            return Err(PreprocessError::DegenerateSegment);
        }
        let params = match mode {
            Scaling::None => unreachable!(),
            Scaling::Uniform => {
                let (lo, hi) = segment
                    .iter()
                    .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                Self {
                    offset: lo,
                    divisor: hi - lo,
                }
            }
            Scaling::Gaussian => {
                let n = T::count(segment.len());
                let mean = segment.iter().copied().sum::<T>() / n;
                let ss = segment.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
                Self {
                    offset: mean,
                    divisor: (ss / (n - T::one())).sqrt(),
                }
            }
        };
        if params.divisor > T::zero() && params.divisor.is_finite() {
            Ok(params)
        } else {
            Err(PreprocessError::DegenerateSegment)
        }
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        (x - self.offset) / self.divisor
    }

    /// Scales `segment` into `out`, replacing its contents.
    pub fn apply_into(&self, segment: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend(segment.iter().map(|&v| self.apply(v)));
    }
}

/// Standardizes one segment: identity, min-max onto [0, 1], or z-score with
/// the sample (n - 1) standard deviation.
pub fn scale_segment<T: Scalar>(segment: &[T], mode: Scaling) -> Result<Vec<T>, PreprocessError> {
    if segment.len() < 2 {
        return Err(PreprocessError::SegmentTooShort(segment.len()));
    }
    let params = ScaleParams::fit(segment, mode)?;
    let mut out = Vec::with_capacity(segment.len());
    params.apply_into(segment, &mut out);
    Ok(out)
}
