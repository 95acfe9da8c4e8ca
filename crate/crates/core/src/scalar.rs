//! Numeric backends for probabilities and vulnerabilities.
//!
//! Every probabilistic quantity in the crate is generic over [`Scalar`]. Two
//! backends exist: [`Exact`] (arbitrary-precision rationals, no rounding) and
//! `f64`, whose comparisons use a relative tolerance of [`FLOAT_TOLERANCE`].

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Exact = BigRational;

/// Relative tolerance used by float-mode comparisons.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// `true` for backends that never round.
    const EXACT: bool;

    fn from_rational(value: &BigRational) -> Self;

    /// Converts a binary64 value without further rounding. The rational
    /// backend represents the float's exact binary value.
    fn from_f64(value: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Equality in exact mode; relative closeness within [`FLOAT_TOLERANCE`] in float mode.
    fn close_to(&self, other: &Self) -> bool;

    fn from_ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }

    fn from_biguint(value: &BigUint) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(value.clone())))
    }

    fn from_u64(value: u64) -> Self {
        Self::from_ratio(value, 1u32)
    }

    fn powu(&self, exp: u64) -> Self {
        let mut base = self.clone();
        let mut exp = exp;
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base.clone();
            }
            exp >>= 1;
            if exp > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn from_f64(value: f64) -> Self {
        BigRational::from_float(value).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn close_to(&self, other: &Self) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(value: &BigRational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn from_f64(value: f64) -> Self {
        value
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn close_to(&self, other: &Self) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= FLOAT_TOLERANCE * scale
    }
}

/// Checks `lower <= p <= 1`.
pub(crate) fn check_probability<S: Scalar>(p: &S, lower: &S) -> crate::Result<()> {
    if p < lower || *p > S::one() {
        return Err(crate::QifError::ProbabilityOutOfRange {
            p: p.to_string(),
            lower: lower.to_string(),
        });
    }
    Ok(())
}

/// Checks the k-RR parameter range `[1/k, 1]`.
pub fn check_krr_probability<S: Scalar>(p: &S, k: u32) -> crate::Result<()> {
    if k < 2 {
        return Err(crate::QifError::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    check_probability(p, &S::from_ratio(1u32, k))
}

/// Neumaier-compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}
