//! Scalar abstraction for the numeric core.
//!
//! Every module that does arithmetic is generic over [`Scalar`] so the same
//! code runs at `f32` or `f64`. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar type for payoffs, centralities and distributions.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Convert an `f64` constant into the scalar type.
#[inline]
pub fn cast<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Convert a scalar into `f64` (exact for f32/f64).
#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}

/// Convert a `usize` count into the scalar type.
#[inline]
pub fn from_count<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("count representable in scalar type")
}
