//! Scalar abstraction shared by the model math.
//!
//! Car-following, lane-change, kinematics, projection and path-loss code is
//! written against [`Scalar`] so it can be evaluated in `f32` or `f64`. The
//! simulation world itself runs on `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type usable by the model equations: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Default + 'static {
    /// Converts an `f64` literal or constant into `Self`.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable in scalar type")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Scalar>::lit(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::lit(0.25), 0.25f32);
        assert_eq!(f64::two(), 2.0);
        assert_eq!(f32::half(), 0.5);
    }
}
