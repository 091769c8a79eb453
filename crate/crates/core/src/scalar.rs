//! Scalar abstraction used by the whole crate.
//!
//! Every numerical routine is generic over [`Real`], implemented for `f32`
//! and `f64`. Concrete `f64` aliases of the main types live at the crate
//! root; the generic forms exist so single-precision rollouts can be used
//! where throughput matters more than accuracy.

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real: Copy + RealField + FromPrimitive + Send + Sync {
    /// `true` when the value is neither NaN nor infinite.
    fn finite(self) -> bool;

    /// Widen to `f64` for reporting and file output.
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn finite(self) -> bool {
        f32::is_finite(self)
    }

    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    #[inline]
    fn finite(self) -> bool {
        f64::is_finite(self)
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Convert an `f64` constant into the active scalar type.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("constant not representable in scalar type")
}
