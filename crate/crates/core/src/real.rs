//! Scalar abstraction: every numerical kernel is generic over a floating
//! point type implementing [`Real`]. Concrete aliases at the crate root pin
//! the default (f64) used by the CLI and the experiment pipeline.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: f32 or f64.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Convert an f64 literal. Panics only if the target type cannot
    /// represent any finite value, which none of the implementors do.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite value")
    }

    fn from_usize_(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits")
    }
}

impl Real for f32 {}
impl Real for f64 {}
