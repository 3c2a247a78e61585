//! Scalar abstraction: every numeric routine in this crate is generic over the
//! floating-point type, so the same code runs in `f32` and `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used throughout the crate.
///
/// Implemented for `f32` and `f64`. The crate root exports `f64` aliases of the main
/// types; `f64` is what the CLI and all shipped configurations use.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Panics if the value is not representable; only used for fixed literals that
    /// every IEEE float can hold.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Converts to `f64` for reports and error messages.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
