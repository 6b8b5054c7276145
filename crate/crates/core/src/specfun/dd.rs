//! Compensated double-double arithmetic.
//!
//! A [`Dd`] holds a real number as the unevaluated sum `hi + lo` of two
//! doubles with `|lo| <= ulp(hi)/2`, giving roughly 31 significant decimal
//! digits. It exists for two jobs where plain `f64` runs out of headroom:
//! Gram matrices whose condition number eats more than half the mantissa,
//! and small-lag kernel differences of the form `K(0) - K(eps)` that cancel
//! almost completely.
//!
//! The algorithms are the classic error-free transforms (`two_sum`,
//! `two_prod` via FMA) with the "accurate" (Knuth-style) variants of
//! addition and division throughout; we never trade the low limb for speed
//! because every call site here is precision-critical by construction.

// Residual limbs are written with their full published digits.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Double-double scalar: `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// `a + b` and the exact rounding error, assuming `|a| >= |b|`.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// `a + b` and the exact rounding error, no magnitude assumption.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

/// `a * b` and the exact rounding error, via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// pi to double-double precision: the nearest f64 plus its residual.
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224646799147353207e-16,
    };
    /// ln 2 to double-double precision.
    pub const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319046813846299558e-17,
    };
    /// Euler's number to double-double precision.
    pub const E: Dd = Dd {
        hi: std::f64::consts::E,
        lo: 1.445646891729250158e-16,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Nearest f64 (exact: normalization makes `hi` the correct rounding).
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Add an f64 exactly.
    #[inline]
    pub fn add_f64(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    /// Multiply by an f64.
    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    /// Multiply by an exact power of two (error-free).
    #[inline]
    pub fn mul_pwr2(self, b: f64) -> Dd {
        Dd {
            hi: self.hi * b,
            lo: self.lo * b,
        }
    }

    /// Square (slightly cheaper and tighter than `self * self`).
    #[inline]
    pub fn sqr(self) -> Dd {
        let (p, e) = two_prod(self.hi, self.hi);
        let (hi, lo) = quick_two_sum(p, e + 2.0 * self.hi * self.lo);
        Dd { hi, lo }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    /// Square root by one Newton correction on the f64 estimate (Karp).
    ///
    /// Full double-double accuracy for nonnegative finite inputs.
    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "Dd::sqrt of negative value {self:?}");
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let err = self - Dd::from(ax).sqr();
        Dd::from(ax).add_f64(err.hi * (x * 0.5))
    }

    /// Exponential.
    ///
    /// Range-reduce `x = m ln2 + r`, scale `r` down by 2^9 so the Taylor tail
    /// is short, then square back up via `(1+s)^2 - 1 = s(s+2)` which keeps
    /// the computation in the well-conditioned `exp(r) - 1` form. Relative
    /// accuracy a few units in the 31st digit over the kernel-evaluation
    /// range `|x| <= ~700`.
    pub fn exp(self) -> Dd {
        if self.hi <= -746.0 {
            return Dd::ZERO;
        }
        if self.hi >= 709.0 {
            return Dd {
                hi: f64::INFINITY,
                lo: 0.0,
            };
        }
        let m = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2.mul_f64(m)).mul_pwr2(1.0 / 512.0);
        // Taylor series for exp(r) - 1 with |r| <= ln2/1024 ~ 6.8e-4:
        // terms fall below 1e-40 by k ~ 10.
        let r2 = r.sqr();
        let mut s = r + r2.mul_pwr2(0.5);
        let mut p = r2 * r;
        let mut k = 3usize;
        loop {
            let t = p * inv_factorial(k);
            s = s + t;
            if t.hi.abs() < 1e-40 || k + 1 >= INV_FACT_LEN {
                break;
            }
            p = p * r;
            k += 1;
        }
        for _ in 0..9 {
            s = s * s.add_f64(2.0);
        }
        let e = s.add_f64(1.0);
        // 2^m with |m| <= ~1075; split the scaling so the factor stays normal.
        let half = 2.0f64.powi((m as i32) / 2);
        let rest = 2.0f64.powi(m as i32 - (m as i32) / 2);
        Dd {
            hi: e.hi * half * rest,
            lo: e.lo * half * rest,
        }
    }
}

const INV_FACT_LEN: usize = 18;

/// 1/k! as double-double, k < 18, computed once by exact-dividend division.
fn inv_factorial(k: usize) -> Dd {
    static TABLE: OnceLock<[Dd; INV_FACT_LEN]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [Dd::ONE; INV_FACT_LEN];
        let mut fact = Dd::ONE;
        for (i, slot) in t.iter_mut().enumerate().skip(1) {
            fact = fact.mul_f64(i as f64);
            *slot = Dd::ONE / fact;
        }
        t
    });
    table[k]
}

impl From<f64> for Dd {
    #[inline]
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s2, e2) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s2, e2 + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        debug_assert!(o.hi != 0.0, "Dd division by zero");
        let q1 = self.hi / o.hi;
        let r = self - o.mul_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o.mul_f64(q2);
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add_f64(q3)
    }
}

impl PartialOrd for Dd {
    #[inline]
    fn partial_cmp(&self, o: &Dd) -> Option<Ordering> {
        // Lexicographic on (hi, lo) is the numeric order for normalized values.
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            ord => ord,
        }
    }
}
