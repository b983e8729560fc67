use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Real scalar the whole toolkit is generic over.
///
/// Training and inference default to `f32`; gradient checking runs in `f64`.
pub trait Scalar:
    Float + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Short type tag written into model file headers.
    const NAME: &'static str;

    /// Converts from an `f64` literal, rounding to nearest.
    fn of(v: f64) -> Self;

    fn to_f64_lossless(self) -> f64;

    fn to_f32_rounded(self) -> f32;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn to_f32_rounded(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn to_f32_rounded(self) -> f32 {
        self as f32
    }
}
