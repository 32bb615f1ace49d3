//! Scalar traits shared by the feature, alignment and visualization code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, PrimInt, Signed, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type carrying pitch, loudness and normalized channel values.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Converts a literal. Panics only for values the type cannot represent at all.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Clamps into `[0, 1]`; NaN maps to zero.
    fn unit_clamp(self) -> Self {
        if self.is_nan() {
            Self::zero()
        } else {
            self.max(Self::zero()).min(Self::one())
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Signed integer type used for alignment scores.
pub trait Score: PrimInt + Signed + Debug + Display + Default + Send + Sync + 'static {
    fn lit(v: i32) -> Self {
        Self::from(v).expect("literal representable as score")
    }
}

impl<T: PrimInt + Signed + Debug + Display + Default + Send + Sync + 'static> Score for T {}
