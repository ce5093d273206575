//! First-order dual numbers. Nesting `Dual<Dual<F>>` yields exact second
//! derivatives, which is how Hessians are produced.

use crate::scalar::DiffScalar;
use num_traits::FromPrimitive;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub val: T,
    pub der: T,
}

#[inline]
fn lit<T: DiffScalar>(x: f64) -> T {
    T::constant(<T::Real as FromPrimitive>::from_f64(x).unwrap())
}

impl<T: DiffScalar> Dual<T> {
    #[inline]
    pub fn new(val: T, der: T) -> Self {
        Dual { val, der }
    }

    /// Lift a value with zero derivative part.
    #[inline]
    pub fn lift(val: T) -> Self {
        Dual { val, der: lit(0.0) }
    }

    /// A variable seeded with unit derivative.
    #[inline]
    pub fn seeded(val: T) -> Self {
        Dual { val, der: lit(1.0) }
    }
}

impl<T: DiffScalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.val + o.val, self.der + o.der)
    }
}

impl<T: DiffScalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.val - o.val, self.der - o.der)
    }
}

impl<T: DiffScalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.val * o.val, self.der * o.val + self.val * o.der)
    }
}

impl<T: DiffScalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let val = self.val / o.val;
        Dual::new(val, (self.der - val * o.der) / o.val)
    }
}

impl<T: DiffScalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.val, -self.der)
    }
}

impl<T: DiffScalar> DiffScalar for Dual<T> {
    type Real = T::Real;

    #[inline]
    fn constant(c: T::Real) -> Self {
        Dual::lift(T::constant(c))
    }
    #[inline]
    fn real_value(self) -> T::Real {
        self.val.real_value()
    }
    #[inline]
    fn all_finite(self) -> bool {
        self.val.all_finite() && self.der.all_finite()
    }

    #[inline]
    fn sin(self) -> Self {
        Dual::new(self.val.sin(), self.der * self.val.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Dual::new(self.val.cos(), -(self.der * self.val.sin()))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.val.exp();
        Dual::new(e, self.der * e)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.val.ln(), self.der / self.val)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.val.sqrt();
        Dual::new(r, self.der / (lit::<T>(2.0) * r))
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual::new(lit(1.0), lit(0.0)),
            1 => self,
            _ => Dual::new(
                self.val.powi(n),
                lit::<T>(f64::from(n)) * self.val.powi(n - 1) * self.der,
            ),
        }
    }
    fn powf(self, e: T::Real) -> Self {
        let one = <T::Real as FromPrimitive>::from_f64(1.0).unwrap();
        Dual::new(
            self.val.powf(e),
            T::constant(e) * self.val.powf(e - one) * self.der,
        )
    }
}
