//! Floating point abstraction shared by every solver.
//!
//! All model formulas and solvers are written against [`Scalar`] so the same
//! code runs in `f64` (the reference precision) and `f32`. Tolerances that are
//! meaningful in `f64` are clamped to a small multiple of machine epsilon via
//! [`Scalar::tol`], so an `f32` build terminates instead of chasing digits it
//! cannot represent.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in the supported types.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// A tolerance of `x`, but never tighter than 64 ulps at 1.0.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::of(x).max(Self::epsilon() * Self::of(64.0))
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(self, 0)`.
    #[inline]
    fn pos(self) -> Self {
        self.max(Self::zero())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
