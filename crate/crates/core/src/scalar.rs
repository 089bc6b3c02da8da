//! Scalar abstractions shared by the numeric modules.
//!
//! Two tiers exist. [`Weight`] covers field arithmetic only (`+ - * /` and
//! ordering), which is all that reference proportions and the integration
//! score need; exact rationals satisfy it, so worked examples can be checked
//! without rounding. [`Real`] adds the transcendental functions needed by
//! cosine similarity and the regression engine.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, Num};

/// Ordered field element usable as a proportion or similarity.
pub trait Weight: Num + Clone + PartialOrd + FromPrimitive + Debug + Send + Sync {
    /// `n` as a field element. Panics only if the type cannot hold small integers.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("scalar type cannot represent a count")
    }
}

impl<T> Weight for T where T: Num + Clone + PartialOrd + FromPrimitive + Debug + Send + Sync {}

/// Floating-point scalar for the numerical routines.
pub trait Real:
    Float + Weight + Copy + Default + Display + LowerExp + FromStr + Sum + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range for scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
