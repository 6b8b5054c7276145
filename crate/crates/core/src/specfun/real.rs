//! Scalar abstraction over native `f64` and double-double precision.
//!
//! Kernel evaluation and the pivoted Cholesky factorization are written once,
//! generically, and instantiated at both precisions; the `unit_roundoff`
//! constant is what condition-number policies compare against.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::dd::Dd;
use super::erf;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Unit roundoff of the representation (2^-53 native, ~2^-105 extended).
    const UNIT_ROUNDOFF: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    /// Complementary error function. The extended impl carries full precision
    /// only for `|x| <= 2.5` (the Maclaurin-series domain), which covers every
    /// precision-critical call site; outside it falls back to the f64 value.
    fn erfc(self) -> Self;
    fn scale(self, b: f64) -> Self;
}

impl Real for f64 {
    const UNIT_ROUNDOFF: f64 = 1.1102230246251565e-16;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        erf::erfc(self)
    }
    #[inline]
    fn scale(self, b: f64) -> Self {
        self * b
    }
}

impl Real for Dd {
    // 2^-105: half an ulp of the 106-bit effective significand.
    const UNIT_ROUNDOFF: f64 = 2.465190328815662e-32;

    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd::from(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    #[inline]
    fn abs(self) -> Self {
        Dd::abs(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        Dd::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        Dd::exp(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        if self.abs().to_f64() <= 2.5 {
            erf::erfc_dd(self)
        } else {
            Dd::from(erf::erfc(self.to_f64()))
        }
    }
    #[inline]
    fn scale(self, b: f64) -> Self {
        self.mul_f64(b)
    }
}
