//! Scalar abstraction for the numeric kernels.
//!
//! Everything in [`crate::tensor`], [`crate::fft`] and [`crate::fremlp`] is
//! generic over [`Scalar`] so the same kernels run in `f32` or `f64`. The
//! model and training layers pin `f64` (see the aliases at the crate root):
//! the verification suites check transforms to 1e-9 and gradients to 1e-4,
//! which single precision cannot hold.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point element type accepted by the tensor kernels.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssignOps + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Conversion from a length or index, used for transform scaling factors.
pub fn scalar_from_usize<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("usize representable as scalar")
}

/// Conversion from `f64` constants (twiddle tables, tolerances).
pub fn scalar_from_f64<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("f64 representable as scalar")
}
