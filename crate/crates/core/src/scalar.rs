//! Numeric scalars used by the market and refinement code.
//!
//! Everything downstream of the solver is generic over [`Scalar`] so the same
//! surgery runs on `f64` and on exact [`Rational`] numbers. Tolerance-aware
//! comparisons go through [`Tol`]: for exact scalars every tolerance collapses
//! to zero.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational arithmetic with arbitrary precision.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Sum
{
    /// True when arithmetic is exact and tolerances must be ignored.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_usize(x: usize) -> Self {
        Self::from_ratio(x as i64, 1)
    }
    fn to_f64(&self) -> f64;
    /// Nearest representable value; exact for binary floats.
    fn from_f64_lossy(x: f64) -> Self;
    fn abs(&self) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }
    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <Rational as Zero>::zero()
    }
    fn one() -> Self {
        <Rational as One>::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64_lossy(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_else(<Rational as Zero>::zero)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Relative tolerance with an absolute floor: `|x| <= rel * max(|scale|, floor)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tol {
    pub rel: f64,
    pub floor: f64,
}

impl Tol {
    pub const fn new(rel: f64) -> Self {
        Tol { rel, floor: 1e-12 }
    }

    pub const fn with_floor(rel: f64, floor: f64) -> Self {
        Tol { rel, floor }
    }

    /// Whether `x` is indistinguishable from zero relative to `scale`.
    pub fn negligible<S: Scalar>(&self, x: &S, scale: &S) -> bool {
        if S::EXACT {
            x.is_zero()
        } else {
            x.to_f64().abs() <= self.rel * scale.to_f64().abs().max(self.floor)
        }
    }

    pub fn eq<S: Scalar>(&self, a: &S, b: &S) -> bool {
        let scale = S::max_of(a.abs(), b.abs());
        self.negligible(&(a.clone() - b.clone()), &scale)
    }

    /// `a > b` by more than the tolerance.
    pub fn gt<S: Scalar>(&self, a: &S, b: &S) -> bool {
        a > b && !self.eq(a, b)
    }

    /// Entry counts as a positive share.
    pub fn positive<S: Scalar>(&self, x: &S) -> bool {
        if S::EXACT {
            x.is_positive()
        } else {
            x.to_f64() > self.rel
        }
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued fractions). Returns `None` when the approximation is off by more
/// than `1e-12 * max(1, |x|)`, i.e. `x` is not a "small" rational.
pub fn rational_from_f64(x: f64, max_den: u64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let negative = x < 0.0;
    let target = x.abs();
    let (mut h0, mut h1): (u128, u128) = (0, 1);
    let (mut k0, mut k1): (u128, u128) = (1, 0);
    let mut frac = target;
    let mut best: Option<(u128, u128)> = None;
    for _ in 0..64 {
        let a = frac.floor();
        if a > 1e18 {
            break;
        }
        let a_int = a as u128;
        let h2 = a_int * h1 + h0;
        let k2 = a_int * k1 + k0;
        if k2 > max_den as u128 {
            break;
        }
        best = Some((h2, k2));
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let rem = frac - a;
        if rem < 1e-15 {
            break;
        }
        frac = 1.0 / rem;
    }
    let (num, den) = best?;
    let approx = num as f64 / den as f64;
    if (approx - target).abs() > 1e-12 * target.max(1.0) {
        return None;
    }
    let mut q = Rational::new(BigInt::from(num), BigInt::from(den));
    if negative {
        q = -q;
    }
    Some(q)
}

/// Parses `"a/b"` or a decimal literal into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Ok(int) = text.parse::<BigInt>() {
        return Some(Rational::from_integer(int));
    }
    // decimal literal: exact base-10 expansion
    let (int_part, frac_part) = text.split_once('.')?;
    let negative = int_part.starts_with('-');
    let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let q = Rational::new(num, den);
    Some(if negative { -q } else { q })
}
