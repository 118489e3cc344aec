//! Exact probability intervals.
//!
//! A [`ProbInterval`] is a certified two-sided enclosure of an absorption
//! probability, with exact rational endpoints in [0, 1]. All combining
//! operations are monotone so soundness is preserved endpoint-wise.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linear_form::{ratio_to_f64_ceil, ratio_to_f64_floor};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("invalid probability interval [{0}, {1}]")]
    Invalid(String, String),
}

/// Certified enclosure `lo ≤ p ≤ hi` with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbInterval {
    lo: BigRational,
    hi: BigRational,
}

impl ProbInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self, IntervalError> {
        if lo.is_negative() || hi > BigRational::one() || lo > hi {
            return Err(IntervalError::Invalid(lo.to_string(), hi.to_string()));
        }
        Ok(ProbInterval { lo, hi })
    }

    pub fn exact(p: BigRational) -> Result<Self, IntervalError> {
        Self::new(p.clone(), p)
    }

    pub fn zero() -> Self {
        ProbInterval {
            lo: BigRational::zero(),
            hi: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        ProbInterval {
            lo: BigRational::one(),
            hi: BigRational::one(),
        }
    }

    /// The vacuous enclosure [0, 1].
    pub fn full() -> Self {
        ProbInterval {
            lo: BigRational::zero(),
            hi: BigRational::one(),
        }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, p: &BigRational) -> bool {
        &self.lo <= p && p <= &self.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.clone().max(other.lo.clone());
        let hi = self.hi.clone().min(other.hi.clone());
        if lo <= hi {
            Some(ProbInterval { lo, hi })
        } else {
            None
        }
    }

    /// `w·win + (1-w)·lose`, endpoint-wise. Sound because the expectation
    /// is monotone in both arguments for w in (0, 1).
    pub fn mix(w: &BigRational, win: &Self, lose: &Self) -> Self {
        let wc = BigRational::one() - w;
        ProbInterval {
            lo: w * &win.lo + &wc * &lose.lo,
            hi: w * &win.hi + &wc * &lose.hi,
        }
    }

    /// Directed float rendering (lo rounded down, hi rounded up).
    pub fn to_f64_pair(&self) -> (f64, f64) {
        (ratio_to_f64_floor(&self.lo), ratio_to_f64_ceil(&self.hi))
    }

    pub fn width_f64(&self) -> f64 {
        ratio_to_f64_ceil(&self.width())
    }
}

/// Rounds down to the grid of denominators 2^bits. Sound for lower bounds.
pub fn round_down_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let scaled_num = x.numer() << bits;
    let q = scaled_num.div_floor(x.denom());
    BigRational::new(q, BigInt::one() << bits)
}

/// Rounds up to the grid of denominators 2^bits. Sound for upper bounds.
pub fn round_up_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let scaled_num = x.numer() << bits;
    let q = scaled_num.div_ceil(x.denom());
    BigRational::new(q, BigInt::one() << bits)
}

impl fmt::Display for ProbInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_f64_pair();
        write!(f, "[{}, {}] (~[{lo}, {hi}])", self.lo, self.hi)
    }
}

/// Wire representation with exact strings alongside floats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbIntervalRepr {
    pub lo: String,
    pub hi: String,
    pub lo_float: f64,
    pub hi_float: f64,
}

impl From<ProbInterval> for ProbIntervalRepr {
    fn from(i: ProbInterval) -> Self {
        let (lo_float, hi_float) = i.to_f64_pair();
        ProbIntervalRepr {
            lo: i.lo.to_string(),
            hi: i.hi.to_string(),
            lo_float,
            hi_float,
        }
    }
}

fn parse_ratio(s: &str) -> Result<BigRational, String> {
    s.parse::<BigRational>().map_err(|e| format!("bad rational {s:?}: {e}"))
}

impl TryFrom<ProbIntervalRepr> for ProbInterval {
    type Error = String;

    fn try_from(r: ProbIntervalRepr) -> Result<Self, Self::Error> {
        ProbInterval::new(parse_ratio(&r.lo)?, parse_ratio(&r.hi)?).map_err(|e| e.to_string())
    }
}

impl Serialize for ProbInterval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ProbIntervalRepr::from(self.clone()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProbInterval {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = ProbIntervalRepr::deserialize(deserializer)?;
        ProbInterval::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// A general exact interval, not constrained to [0, 1]. Used for
/// Q-difference enclosures, which can straddle zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Serialize for ExactInterval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("ExactInterval", 2)?;
        s.serialize_field("lo", &self.lo.to_string())?;
        s.serialize_field("hi", &self.hi.to_string())?;
        s.end()
    }
}

impl ExactInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        ExactInterval { lo, hi }
    }

    /// Enclosure of `a - b` for enclosures a, b.
    pub fn sub(a: &ProbInterval, b: &ProbInterval) -> Self {
        ExactInterval {
            lo: a.lo() - b.hi(),
            hi: a.hi() - b.lo(),
        }
    }

    /// Divides by an exact positive scalar.
    pub fn div_positive(&self, d: &BigRational) -> Self {
        debug_assert!(d.is_positive());
        ExactInterval {
            lo: &self.lo / d,
            hi: &self.hi / d,
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (ratio_to_f64_floor(&self.lo), ratio_to_f64_ceil(&self.hi))
    }
}
