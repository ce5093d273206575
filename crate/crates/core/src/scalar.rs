//! Scalar abstraction: the floating type everything is generic over, and the
//! differentiable-scalar trait shared by plain floats and dual numbers.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    RealField
    + FromPrimitive
    + ToPrimitive
    + Copy
    + Default
    + Display
    + LowerExp
    + DiffScalar<Real = Self>
{
    const EPSILON: Self;

    fn finite(self) -> bool;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            const EPSILON: Self = <$f>::EPSILON;

            #[inline]
            fn finite(self) -> bool {
                self.is_finite()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Convert an `f64` constant into the working scalar.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("constant representable in scalar type")
}

/// Scalar-like values the expression evaluator can run on: plain floats for
/// evaluation, dual numbers (possibly nested) for derivatives.
///
/// Domain restrictions (division by zero, `log` of a non-positive value, …)
/// are checked by the evaluator before calling these operations, so the
/// operations themselves are total on their admissible inputs.
pub trait DiffScalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Real: Real;

    fn constant(c: Self::Real) -> Self;
    /// The underlying value, with all derivative parts stripped.
    fn real_value(self) -> Self::Real;
    fn all_finite(self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// Real-exponent power; requires a positive base.
    fn powf(self, e: Self::Real) -> Self;
}

macro_rules! impl_diff_scalar {
    ($f:ty) => {
        impl DiffScalar for $f {
            type Real = $f;

            #[inline]
            fn constant(c: $f) -> Self {
                c
            }
            #[inline]
            fn real_value(self) -> $f {
                self
            }
            #[inline]
            fn all_finite(self) -> bool {
                self.is_finite()
            }

            #[inline]
            fn sin(self) -> Self {
                self.sin()
            }
            #[inline]
            fn cos(self) -> Self {
                self.cos()
            }
            #[inline]
            fn exp(self) -> Self {
                self.exp()
            }
            #[inline]
            fn ln(self) -> Self {
                self.ln()
            }
            #[inline]
            fn sqrt(self) -> Self {
                self.sqrt()
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                self.powi(n)
            }
            #[inline]
            fn powf(self, e: $f) -> Self {
                self.powf(e)
            }
        }
    };
}

impl_diff_scalar!(f32);
impl_diff_scalar!(f64);
