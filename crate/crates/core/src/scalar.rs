//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real number type used for sizes, rates, efficiencies and defect counts.
///
/// Implemented for `f32` and `f64`. Everything in the crate is generic over
/// it; the aliases at the crate root pin `f64`.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for `f32`/`f64`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `value` is finite and not negative.
pub(crate) fn non_negative<T: Scalar>(value: T) -> bool {
    value.is_finite() && value >= T::zero()
}

/// `value` is finite and strictly positive.
pub(crate) fn positive<T: Scalar>(value: T) -> bool {
    value.is_finite() && value > T::zero()
}
