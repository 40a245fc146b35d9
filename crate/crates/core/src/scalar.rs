//! Scalar abstraction for the floating-point parts of the crate.

use std::fmt::Debug;
use std::iter::Sum;

use nalgebra as na;
use num_traits as nt;

/// Gathers the traits the numeric modules need from a real scalar type.
pub trait Real:
    Copy + Debug + PartialOrd + na::RealField + nt::Float + nt::FromPrimitive + Sum
{
    /// Lossy conversion from `f64`, for tolerances and literals.
    fn from_f64_lossy(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("finite f64 converts")
    }

    /// Lossy conversion to `f64`, for serialization and reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
