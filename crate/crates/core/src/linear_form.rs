//! Exact fortunes `p + q·ℓ` with dyadic-rational coefficients.
//!
//! When ℓ is irrational the representation is unique, so componentwise
//! equality decides value equality and the coefficient pair doubles as a
//! memoization key. When ℓ is rational, value comparisons go through the
//! exact sign test and states are keyed by their rational value instead.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicRational;
use crate::ell::EllSpec;

/// Exact value `p + q·ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearForm {
    p: DyadicRational,
    q: DyadicRational,
}

/// Memoization key for a fortune: componentwise for irrational ℓ (unique
/// representation), by exact value for rational ℓ (representations alias).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StateKey {
    Components(DyadicRational, DyadicRational),
    Value(BigRational),
}

impl LinearForm {
    pub fn new(p: DyadicRational, q: DyadicRational) -> Self {
        LinearForm { p, q }
    }

    pub fn zero() -> Self {
        LinearForm {
            p: DyadicRational::zero(),
            q: DyadicRational::zero(),
        }
    }

    pub fn one() -> Self {
        LinearForm {
            p: DyadicRational::one(),
            q: DyadicRational::zero(),
        }
    }

    /// The form `0 + 1·ℓ`.
    pub fn ell_unit() -> Self {
        LinearForm {
            p: DyadicRational::zero(),
            q: DyadicRational::one(),
        }
    }

    pub fn from_rational_part(p: DyadicRational) -> Self {
        LinearForm {
            p,
            q: DyadicRational::zero(),
        }
    }

    /// Rational coefficient p.
    pub fn rational_part(&self) -> &DyadicRational {
        &self.p
    }

    /// Coefficient q of ℓ.
    pub fn ell_coeff(&self) -> &DyadicRational {
        &self.q
    }

    pub fn double(&self) -> Self {
        LinearForm {
            p: self.p.double(),
            q: self.q.double(),
        }
    }

    pub fn halve(&self) -> Self {
        LinearForm {
            p: self.p.halve(),
            q: self.q.halve(),
        }
    }

    /// Value divided by 2^k.
    pub fn shr(&self, k: u32) -> Self {
        LinearForm {
            p: self.p.shr(k),
            q: self.q.shr(k),
        }
    }

    /// True iff both coefficients are zero (the zero form, not merely a
    /// zero value).
    pub fn is_zero_form(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    /// Exact sign of the value under the given ℓ.
    pub fn sign(&self, ell: &EllSpec) -> i32 {
        if self.q.is_zero() {
            return self.p.signum();
        }
        ell.sign_linear(&self.p.to_ratio(), &self.q.to_ratio())
    }

    /// Exact value equality. For irrational ℓ this is componentwise; for
    /// rational ℓ it falls back to the sign of the difference.
    pub fn eq_value(&self, other: &Self, ell: &EllSpec) -> bool {
        if ell.is_irrational() {
            self == other
        } else {
            (self - other).sign(ell) == 0
        }
    }

    /// Exact value comparison under the given ℓ.
    pub fn cmp_value(&self, other: &Self, ell: &EllSpec) -> Ordering {
        match (self - other).sign(ell) {
            s if s > 0 => Ordering::Greater,
            0 => Ordering::Equal,
            _ => Ordering::Less,
        }
    }

    /// Memoization key; see [`StateKey`].
    pub fn state_key(&self, ell: &EllSpec) -> StateKey {
        match ell {
            EllSpec::Surd { .. } => StateKey::Components(self.p.clone(), self.q.clone()),
            EllSpec::Rational { num, den } => {
                let v = self.p.to_ratio()
                    + self.q.to_ratio() * BigRational::new(num.clone(), den.clone());
                StateKey::Value(v)
            }
        }
    }

    /// Exact rational enclosure of the value with width ≤ 2^-bits · max(1, |value|).
    pub fn ratio_bounds(&self, ell: &EllSpec, bits: u32) -> (BigRational, BigRational) {
        let p = self.p.to_ratio();
        let q = self.q.to_ratio();
        if q.is_zero() {
            return (p.clone(), p);
        }
        let (elo, ehi) = ell.ratio_bounds(bits + 64);
        if q.is_positive() {
            (&p + &q * elo, &p + &q * ehi)
        } else {
            (&p + &q * ehi, &p + &q * elo)
        }
    }

    /// Floating-point enclosure of the value. Never used in certified
    /// logic; precision saturates near one f64 ulp.
    pub fn to_f64_interval(&self, ell: &EllSpec, bits: u32) -> (f64, f64) {
        let (lo, hi) = self.ratio_bounds(ell, bits);
        (ratio_to_f64_floor(&lo), ratio_to_f64_ceil(&hi))
    }

    /// Midpoint float approximation, for display.
    pub fn to_f64(&self, ell: &EllSpec) -> f64 {
        let (lo, hi) = self.to_f64_interval(ell, 64);
        0.5 * (lo + hi)
    }
}

/// Largest f64 that is ≤ x.
pub fn ratio_to_f64_floor(x: &BigRational) -> f64 {
    let mut f = x.to_f64().unwrap_or(f64::NAN);
    if f.is_nan() {
        return f64::NEG_INFINITY;
    }
    for _ in 0..4 {
        match BigRational::from_float(f) {
            Some(fr) if fr > *x => f = f.next_down(),
            _ => break,
        }
    }
    f
}

/// Smallest f64 that is ≥ x.
pub fn ratio_to_f64_ceil(x: &BigRational) -> f64 {
    let mut f = x.to_f64().unwrap_or(f64::NAN);
    if f.is_nan() {
        return f64::INFINITY;
    }
    for _ in 0..4 {
        match BigRational::from_float(f) {
            Some(fr) if fr < *x => f = f.next_up(),
            _ => break,
        }
    }
    f
}

impl Add for &LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: &LinearForm) -> LinearForm {
        LinearForm {
            p: &self.p + &rhs.p,
            q: &self.q + &rhs.q,
        }
    }
}

impl Sub for &LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: &LinearForm) -> LinearForm {
        LinearForm {
            p: &self.p - &rhs.p,
            q: &self.q - &rhs.q,
        }
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        LinearForm {
            p: -&self.p,
            q: -&self.q,
        }
    }
}

impl Add for LinearForm {
    type Output = LinearForm;
    fn add(self, rhs: LinearForm) -> LinearForm {
        &self + &rhs
    }
}

impl Sub for LinearForm {
    type Output = LinearForm;
    fn sub(self, rhs: LinearForm) -> LinearForm {
        &self - &rhs
    }
}

impl Neg for LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        -&self
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            write!(f, "{}", self.p)
        } else if self.p.is_zero() {
            write!(f, "{}*ell", self.q)
        } else if self.q.signum() < 0 {
            write!(f, "{} - {}*ell", self.p, -&self.q)
        } else {
            write!(f, "{} + {}*ell", self.p, self.q)
        }
    }
}

/// Wire representation: numerators as decimal strings so arbitrary
/// precision survives JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFormRepr {
    pub p_num: String,
    pub p_exp: u32,
    pub q_num: String,
    pub q_exp: u32,
}

impl From<LinearForm> for LinearFormRepr {
    fn from(lf: LinearForm) -> Self {
        LinearFormRepr {
            p_num: lf.p.numer().to_string(),
            p_exp: lf.p.exp(),
            q_num: lf.q.numer().to_string(),
            q_exp: lf.q.exp(),
        }
    }
}

impl TryFrom<LinearFormRepr> for LinearForm {
    type Error = String;

    fn try_from(r: LinearFormRepr) -> Result<Self, Self::Error> {
        let p_num: BigInt = r.p_num.parse().map_err(|e| format!("bad p_num: {e}"))?;
        let q_num: BigInt = r.q_num.parse().map_err(|e| format!("bad q_num: {e}"))?;
        Ok(LinearForm {
            p: DyadicRational::new(p_num, r.p_exp),
            q: DyadicRational::new(q_num, r.q_exp),
        })
    }
}

impl Serialize for LinearForm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LinearFormRepr::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LinearForm {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = LinearFormRepr::deserialize(deserializer)?;
        LinearForm::try_from(repr).map_err(serde::de::Error::custom)
    }
}
