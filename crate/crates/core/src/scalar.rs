//! Scalar type used by every field in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// f32 or f64
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Default + Display + Debug + Sum + Send + Sync + 'static
{
    /// Machine-epsilon scaled default for "numerically zero".
    fn tiny() -> Self {
        Self::epsilon() * Self::from_f64(64.0).unwrap()
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn two<T: Real>() -> T {
        T::lit(2.0)
    }

    #[test]
    fn literals_roundtrip() {
        assert_eq!(two::<f32>(), 2.0f32);
        assert_eq!(two::<f64>(), 2.0f64);
        assert!(f64::tiny() < 1e-13);
    }
}
