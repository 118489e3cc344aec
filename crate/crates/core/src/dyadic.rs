//! Dyadic rationals: arbitrary-precision values of the form `numer / 2^exp`.
//!
//! These are the coefficients of every exact fortune in the library. The
//! representation is kept normalized (numerator odd whenever `exp > 0`,
//! and zero is stored as `0 / 2^0`), which makes equality and hashing
//! structural.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact dyadic rational `numer / 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numer: BigInt,
    exp: u32,
}

impl DyadicRational {
    /// Builds `numer / 2^exp`, normalizing the representation.
    pub fn new(numer: impl Into<BigInt>, exp: u32) -> Self {
        let mut d = DyadicRational {
            numer: numer.into(),
            exp,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        DyadicRational {
            numer: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        DyadicRational {
            numer: BigInt::one(),
            exp: 0,
        }
    }

    /// 1/2^k.
    pub fn unit(exp: u32) -> Self {
        DyadicRational {
            numer: BigInt::one(),
            exp,
        }
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        DyadicRational {
            numer: n.into(),
            exp: 0,
        }
    }

    pub fn numer(&self) -> &BigInt {
        &self.numer
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    /// Sign of the value: -1, 0, or +1.
    pub fn signum(&self) -> i32 {
        if self.numer.is_zero() {
            0
        } else if self.numer.is_positive() {
            1
        } else {
            -1
        }
    }

    fn normalize(&mut self) {
        if self.numer.is_zero() {
            self.exp = 0;
            return;
        }
        while self.exp > 0 && self.numer.is_even() {
            self.numer >>= 1;
            self.exp -= 1;
        }
    }

    /// Value multiplied by 2.
    pub fn double(&self) -> Self {
        if self.exp > 0 {
            DyadicRational {
                numer: self.numer.clone(),
                exp: self.exp - 1,
            }
        } else {
            DyadicRational {
                numer: &self.numer << 1,
                exp: 0,
            }
        }
    }

    /// Value divided by 2.
    pub fn halve(&self) -> Self {
        DyadicRational::new(self.numer.clone(), self.exp + 1)
    }

    /// Value divided by 2^k.
    pub fn shr(&self, k: u32) -> Self {
        DyadicRational::new(self.numer.clone(), self.exp + k)
    }

    /// Value multiplied by 2^k.
    pub fn shl(&self, k: u32) -> Self {
        let drop = k.min(self.exp);
        DyadicRational::new(&self.numer << (k - drop), self.exp - drop)
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.numer.clone(), BigInt::one() << self.exp)
    }

    /// Exact product; dyadics are closed under multiplication.
    pub fn mul(&self, other: &Self) -> Self {
        DyadicRational::new(&self.numer * &other.numer, self.exp + other.exp)
    }

    fn add_impl(&self, other: &Self) -> Self {
        let e = self.exp.max(other.exp);
        let a = &self.numer << (e - self.exp);
        let b = &other.numer << (e - other.exp);
        DyadicRational::new(a + b, e)
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: &DyadicRational) -> DyadicRational {
        self.add_impl(rhs)
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: &DyadicRational) -> DyadicRational {
        self.add_impl(&-rhs)
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        DyadicRational {
            numer: -&self.numer,
            exp: self.exp,
        }
    }
}

impl Add for DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: DyadicRational) -> DyadicRational {
        &self + &rhs
    }
}

impl Sub for DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: DyadicRational) -> DyadicRational {
        &self - &rhs
    }
}

impl Neg for DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        -&self
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).numer.cmp(&BigInt::zero())
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/2^{}", self.numer, self.exp)
        }
    }
}
