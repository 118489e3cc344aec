//! Directed-rounding floating-point intervals.
//!
//! The coupling diagnostics evaluate quantities like
//! `x^(-log2(1-w))` whose exponents are transcendental, so exact
//! rational arithmetic is off the table. Instead every float operation
//! is wrapped in an enclosure: correctly rounded primitives get a
//! one-ulp outward nudge, and `powf`/`log2` (not correctly rounded by
//! libm) get a wider safety margin. Inequality checks then add the
//! tracked interval widths to their tolerance.

use num_rational::BigRational;
use serde::Serialize;

use crate::linear_form::{ratio_to_f64_ceil, ratio_to_f64_floor};

/// Extra outward ulps applied after `powf`/`log2`, which are not
/// guaranteed correctly rounded.
const LIBM_SLACK_ULPS: u32 = 8;

/// A closed floating-point interval [lo, hi] enclosing a real value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FInterval {
    pub fn exact(x: f64) -> Self {
        FInterval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        FInterval { lo, hi }
    }

    pub fn from_ratio(x: &BigRational) -> Self {
        FInterval {
            lo: ratio_to_f64_floor(x),
            hi: ratio_to_f64_ceil(x),
        }
    }

    pub fn from_ratio_bounds(lo: &BigRational, hi: &BigRational) -> Self {
        FInterval {
            lo: ratio_to_f64_floor(lo),
            hi: ratio_to_f64_ceil(hi),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn add(&self, rhs: &Self) -> Self {
        FInterval {
            lo: (self.lo + rhs.lo).next_down(),
            hi: (self.hi + rhs.hi).next_up(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        FInterval {
            lo: (self.lo - rhs.hi).next_down(),
            hi: (self.hi - rhs.lo).next_up(),
        }
    }

    pub fn neg(&self) -> Self {
        FInterval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let candidates = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        FInterval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    /// Division by an interval bounded away from zero.
    pub fn div(&self, rhs: &Self) -> Self {
        assert!(
            rhs.lo > 0.0 || rhs.hi < 0.0,
            "division by interval containing zero"
        );
        let candidates = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        FInterval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn scale_ratio(&self, r: &BigRational) -> Self {
        self.mul(&Self::from_ratio(r))
    }

    /// Smallest interval containing both.
    pub fn hull(&self, rhs: &Self) -> Self {
        FInterval {
            lo: self.lo.min(rhs.lo),
            hi: self.hi.max(rhs.hi),
        }
    }

    /// `log2` enclosure; requires a strictly positive interval.
    pub fn log2(&self) -> Self {
        assert!(self.lo > 0.0, "log2 of interval touching zero");
        FInterval {
            lo: nudge_down(self.lo.log2(), LIBM_SLACK_ULPS),
            hi: nudge_up(self.hi.log2(), LIBM_SLACK_ULPS),
        }
    }

    /// `base^expo` enclosure for base ≥ 0 and expo > 0. Evaluated at the
    /// four corners with libm slack; `0^p = 0` for p > 0.
    pub fn pow(&self, expo: &Self) -> Self {
        assert!(self.lo >= 0.0, "negative base in pow");
        assert!(expo.lo > 0.0, "pow exponent must be positive");
        let corner = |b: f64, e: f64| -> f64 {
            if b == 0.0 {
                0.0
            } else {
                b.powf(e)
            }
        };
        let candidates = [
            corner(self.lo, expo.lo),
            corner(self.lo, expo.hi),
            corner(self.hi, expo.lo),
            corner(self.hi, expo.hi),
        ];
        let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        FInterval {
            lo: nudge_down(lo, LIBM_SLACK_ULPS).max(0.0),
            hi: nudge_up(hi, LIBM_SLACK_ULPS),
        }
    }

    /// Integer power for a nonnegative base.
    pub fn powi(&self, n: u32) -> Self {
        assert!(self.lo >= 0.0);
        let mut acc = FInterval::exact(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Enclosure of the reciprocal raised to an integer power, for a
    /// positive base: `self^-n`.
    pub fn powi_neg(&self, n: u32) -> Self {
        assert!(self.lo > 0.0);
        FInterval::exact(1.0).div(&self.powi(n))
    }
}

fn nudge_down(mut x: f64, ulps: u32) -> f64 {
    for _ in 0..ulps {
        x = x.next_down();
    }
    x
}

fn nudge_up(mut x: f64, ulps: u32) -> f64 {
    for _ in 0..ulps {
        x = x.next_up();
    }
    x
}

/// Enclosure of `-log2(1-w)` for exact rational w in (0, 1/2); the
/// universal exponent of the distance statistic.
pub fn neg_log2_one_minus(w: &BigRational) -> FInterval {
    let one_minus = FInterval::from_ratio(&(BigRational::from_integer(1.into()) - w));
    one_minus.log2().neg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn arithmetic_encloses() {
        let a = FInterval::exact(0.1);
        let b = FInterval::exact(0.2);
        let s = a.add(&b);
        assert!(s.contains(0.1 + 0.2));
        assert!(s.width() < 1e-15);
        let p = a.mul(&b);
        assert!(p.contains(0.1 * 0.2));
    }

    #[test]
    fn pow_identities() {
        // (1/2)^1 = 1/2
        let h = FInterval::exact(0.5);
        let e = FInterval::exact(1.0);
        let v = h.pow(&e);
        assert!(v.contains(0.5) && v.width() < 1e-12);
        // 0^p = 0
        let z = FInterval::exact(0.0);
        let v = z.pow(&FInterval::exact(0.4));
        assert_eq!(v.lo, 0.0);
        assert!(v.hi <= 0.0 + 1e-300);
        // 1^p = 1
        let one = FInterval::exact(1.0);
        assert!(one.pow(&FInterval::exact(0.415)).contains(1.0));
    }

    #[test]
    fn exponent_for_quarter() {
        // -log2(3/4) = 0.41503749927884...
        let p = neg_log2_one_minus(&r(1, 4));
        assert!(p.contains(0.415_037_499_278_843_7));
        assert!(p.width() < 1e-12);
    }

    #[test]
    fn division_guards() {
        let a = FInterval::new(1.0, 2.0);
        let b = FInterval::new(0.5, 0.25f64.mul_add(2.0, 0.0));
        let q = a.div(&b);
        assert!(q.contains(2.0) && q.contains(4.0));
    }
}
