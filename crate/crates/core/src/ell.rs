//! The stake cap ℓ: an exact rational or quadratic surd in (0, 1/2].
//!
//! Every comparison against ℓ in this crate reduces to
//! [`EllSpec::sign_linear`], the exact sign of `p + q·ℓ` for rational
//! `p, q`. For a surd `(a + b√r)/c` the sign is decided by isolating the
//! radical and comparing squares in integer arithmetic, so no floating
//! point ever enters a certified code path.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllSpecError {
    #[error("denominator must be positive")]
    NonPositiveDenominator,
    #[error("stake cap must lie in (0, 1/2], got approximately {0}")]
    OutOfRange(f64),
    #[error("surd coefficient b must be nonzero")]
    ZeroSurdCoefficient,
    #[error("radicand {0} is a perfect square; use the rational form instead")]
    SquareRadicand(BigInt),
    #[error("radicand must be at least 2, got {0}")]
    RadicandTooSmall(BigInt),
    #[error("cannot parse stake cap from {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// Exact specification of the stake cap ℓ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EllSpec {
    /// ℓ = num/den with den > 0, reduced.
    Rational { num: BigInt, den: BigInt },
    /// ℓ = (a + b√root)/den with den > 0, b ≠ 0, root ≥ 2 nonsquare.
    /// Nonsquare root and nonzero b guarantee ℓ is irrational.
    Surd {
        a: BigInt,
        b: BigInt,
        root: BigInt,
        den: BigInt,
    },
}

impl EllSpec {
    pub fn rational(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self, EllSpecError> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() || den.is_negative() {
            return Err(EllSpecError::NonPositiveDenominator);
        }
        let r = BigRational::new(num, den);
        let ell = EllSpec::Rational {
            num: r.numer().clone(),
            den: r.denom().clone(),
        };
        ell.check_range()?;
        Ok(ell)
    }

    pub fn surd(
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        root: impl Into<BigInt>,
        den: impl Into<BigInt>,
    ) -> Result<Self, EllSpecError> {
        let (a, b, root, den) = (a.into(), b.into(), root.into(), den.into());
        if den.is_zero() || den.is_negative() {
            return Err(EllSpecError::NonPositiveDenominator);
        }
        if b.is_zero() {
            return Err(EllSpecError::ZeroSurdCoefficient);
        }
        if root < BigInt::from(2) {
            return Err(EllSpecError::RadicandTooSmall(root));
        }
        let s = root.sqrt();
        if &s * &s == root {
            return Err(EllSpecError::SquareRadicand(root));
        }
        let ell = EllSpec::Surd { a, b, root, den };
        ell.check_range()?;
        Ok(ell)
    }

    fn check_range(&self) -> Result<(), EllSpecError> {
        let positive = self.sign_linear(&BigRational::zero(), &BigRational::one()) > 0;
        // ℓ ≤ 1/2  ⟺  sign(1/2 - ℓ) ≥ 0
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let at_most_half = self.sign_linear(&half, &(-BigRational::one())) >= 0;
        if positive && at_most_half {
            Ok(())
        } else {
            Err(EllSpecError::OutOfRange(self.to_f64()))
        }
    }

    pub fn is_irrational(&self) -> bool {
        matches!(self, EllSpec::Surd { .. })
    }

    /// True when ℓ is irrational and strictly below 1/2, the hypotheses of
    /// the improvement theorem.
    pub fn is_theorem_ready(&self) -> bool {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        self.is_irrational() && self.sign_linear(&half, &(-BigRational::one())) > 0
    }

    /// Exact sign of `p + q·ℓ`. Total, and never consults floating point.
    pub fn sign_linear(&self, p: &BigRational, q: &BigRational) -> i32 {
        match self {
            EllSpec::Rational { num, den } => {
                // sign(p·den + q·num), everything rational
                let v = p * BigRational::from(den.clone()) + q * BigRational::from(num.clone());
                ratio_sign(&v)
            }
            EllSpec::Surd { a, b, root, den } => {
                // p + q(a + b√root)/den: sign of (p·den + q·a) + (q·b)√root
                let u = p * BigRational::from(den.clone()) + q * BigRational::from(a.clone());
                let v = q * BigRational::from(b.clone());
                // clear denominators (both positive)
                let scale = u.denom() * v.denom();
                let ui: BigInt = (&u * BigRational::from(scale.clone())).to_integer();
                let vi: BigInt = (&v * BigRational::from(scale)).to_integer();
                sign_int_plus_sqrt(&ui, &vi, root)
            }
        }
    }

    /// Compares ℓ with an exact rational.
    pub fn cmp_ratio(&self, x: &BigRational) -> Ordering {
        // sign(ℓ - x)
        match self.sign_linear(&(-x.clone()), &BigRational::one()) {
            s if s > 0 => Ordering::Greater,
            0 => Ordering::Equal,
            _ => Ordering::Less,
        }
    }

    /// Exact rational enclosure of ℓ with width at most 2^-bits.
    pub fn ratio_bounds(&self, bits: u32) -> (BigRational, BigRational) {
        match self {
            EllSpec::Rational { num, den } => {
                let v = BigRational::new(num.clone(), den.clone());
                (v.clone(), v)
            }
            EllSpec::Surd { a, b, root, den } => {
                let (rlo, rhi) = sqrt_bounds(root, bits + 8);
                let a = BigRational::from(a.clone());
                let b = BigRational::from(b.clone());
                let den = BigRational::from(den.clone());
                let (slo, shi) = if b.is_positive() {
                    (&b * rlo, &b * rhi)
                } else {
                    (&b * rhi, &b * rlo)
                };
                (((&a + slo) / &den), ((&a + shi) / &den))
            }
        }
    }

    /// Float approximation, for display only.
    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.ratio_bounds(64);
        let m = (lo + hi) / BigRational::from(BigInt::from(2));
        m.to_f64().unwrap_or(f64::NAN)
    }
}

pub(crate) fn ratio_sign(x: &BigRational) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Exact sign of `u + v√root` for integers u, v and nonsquare root ≥ 2.
fn sign_int_plus_sqrt(u: &BigInt, v: &BigInt, root: &BigInt) -> i32 {
    let su = bigint_sign(u);
    let sv = bigint_sign(v);
    if sv == 0 {
        return su;
    }
    if su == 0 {
        return sv;
    }
    if su == sv {
        return su;
    }
    // Opposite signs: compare u^2 against v^2·root on the positive side.
    let lhs = u * u;
    let rhs = v * v * root;
    let cmp = lhs.cmp(&rhs);
    // root nonsquare and v ≠ 0 rule out equality
    debug_assert_ne!(cmp, Ordering::Equal);
    match cmp {
        Ordering::Greater => su,
        _ => sv,
    }
}

fn bigint_sign(x: &BigInt) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Rational enclosure of √root with width at most 2^-bits.
fn sqrt_bounds(root: &BigInt, bits: u32) -> (BigRational, BigRational) {
    let scaled = root << (2 * bits as usize);
    let s = scaled.sqrt(); // floor square root
    let den = BigInt::one() << bits;
    (
        BigRational::new(s.clone(), den.clone()),
        BigRational::new(s + 1, den),
    )
}

impl fmt::Display for EllSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EllSpec::Rational { num, den } => write!(f, "{num}/{den}"),
            EllSpec::Surd { a, b, root, den } => {
                if b.is_negative() {
                    write!(f, "({a}-{}*sqrt({root}))/{den}", -b)
                } else {
                    write!(f, "({a}+{b}*sqrt({root}))/{den}")
                }
            }
        }
    }
}

impl FromStr for EllSpec {
    type Err = EllSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ell(s)
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> EllSpecError {
    EllSpecError::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

fn parse_bigint(input: &str, tok: &str) -> Result<BigInt, EllSpecError> {
    tok.trim()
        .parse::<BigInt>()
        .map_err(|e| parse_err(input, format!("bad integer {tok:?}: {e}")))
}

/// Accepted forms: `p/q`, `p`, `sqrt(p/q)`, `(a+b*sqrt(r))/c` (also with `-b`).
fn parse_ell(input: &str) -> Result<EllSpec, EllSpecError> {
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(rest) = s.strip_prefix("sqrt(") {
        let inner = rest
            .strip_suffix(')')
            .ok_or_else(|| parse_err(input, "missing closing parenthesis"))?;
        let (p, q) = match inner.split_once('/') {
            Some((p, q)) => (parse_bigint(input, p)?, parse_bigint(input, q)?),
            None => (parse_bigint(input, inner)?, BigInt::one()),
        };
        if q.is_zero() || q.is_negative() || p.is_negative() {
            return Err(parse_err(input, "sqrt argument must be a positive fraction"));
        }
        // sqrt(p/q) = sqrt(p·q)/q
        let radicand = &p * &q;
        let isq = radicand.sqrt();
        if &isq * &isq == radicand {
            return EllSpec::rational(isq, q);
        }
        return EllSpec::surd(0, 1, radicand, q);
    }
    if let Some(rest) = s.strip_prefix('(') {
        let (body, den) = rest
            .split_once(")/")
            .ok_or_else(|| parse_err(input, "expected (a+b*sqrt(r))/c"))?;
        let den = parse_bigint(input, den)?;
        // split body into a ± b*sqrt(r)
        let (a_tok, sign, tail) = match body.char_indices().skip(1).find(|(_, c)| *c == '+' || *c == '-') {
            Some((i, c)) => (&body[..i], if c == '+' { 1 } else { -1 }, &body[i + 1..]),
            None => return Err(parse_err(input, "expected a+b*sqrt(r) body")),
        };
        let a = parse_bigint(input, a_tok)?;
        let (b_tok, r_tok) = tail
            .split_once("*sqrt(")
            .ok_or_else(|| parse_err(input, "expected b*sqrt(r) term"))?;
        let r_tok = r_tok
            .strip_suffix(')')
            .ok_or_else(|| parse_err(input, "missing closing parenthesis"))?;
        let b = parse_bigint(input, b_tok)? * sign;
        let root = parse_bigint(input, r_tok)?;
        return EllSpec::surd(a, b, root, den);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (parse_bigint(input, n)?, parse_bigint(input, d)?),
        None => (parse_bigint(input, &s)?, BigInt::one()),
    };
    EllSpec::rational(num, den)
}

impl Serialize for EllSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EllSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
