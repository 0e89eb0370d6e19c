//! Floating-point abstraction shared by every numeric routine in the crate.
//!
//! Training runs at `f32`; gradient verification runs at `f64`. Everything
//! numeric is written once against [`Scalar`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar usable by the layer library, filters and model: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Name written into model headers.
    const NAME: &'static str;

    /// Lossy conversion from `f64`, used for constants and hyperparameters.
    #[inline]
    fn of(v: f64) -> Self {
        // Every f64 is representable (possibly rounded or as ±inf) in f32/f64.
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_f32_sample(v: f32) -> Self {
        Self::of(v as f64)
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f32_sample(v: f32) -> Self {
        v
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip_for_representable_values() {
        assert_eq!(<f32 as Scalar>::of(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::of(0.1), 0.1f64);
        assert_eq!(<f64 as Scalar>::from_f32_sample(0.25), 0.25);
        assert_eq!(1.5f32.as_f64(), 1.5);
    }
}
