//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Filtering, monitoring, expected utilities and the annealer are all written
//! against [`Real`], so the same code runs in `f32` or `f64`. Random variates
//! are always drawn in `f64` and narrowed afterwards, which keeps the random
//! streams identical across scalar types.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the models: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, saturating to infinity when out of range.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| {
            if x < 0.0 {
                Self::neg_infinity()
            } else {
                Self::infinity()
            }
        })
    }

    /// Converts a count or index.
    fn from_count(n: u64) -> Self {
        Self::lit(n as f64)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest positive value the type can hold that is not below `floor`.
    ///
    /// `1e-300` underflows in `f32`; there the smallest normal value is used.
    fn positive_floor(floor: f64) -> Self {
        Self::lit(floor).max(Self::min_positive_value())
    }
}

impl Real for f32 {}
impl Real for f64 {}
