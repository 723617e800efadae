//! Scalar abstraction for the numeric core.
//!
//! Distribution fitting and sampling are written against [`Scalar`] so the
//! same code runs at `f32` or `f64`. The rest of the toolkit pins `f64`
//! through the aliases at the crate root; the stated accuracy contracts
//! (e.g. the zeta-function error bound) hold for the `f64` instantiation.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<T>
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Lossy conversion from `f64`; `f32` rounds (or saturates to infinity).
#[inline]
pub(crate) fn from_f64<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 converts into every Scalar")
}

/// Conversion from an unsigned count.
#[inline]
pub(crate) fn from_count<F: Scalar>(n: u64) -> F {
    F::from_u64(n).expect("u64 converts into every Scalar")
}
