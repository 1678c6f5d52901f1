//! Exact scalars used as polynomial coefficients.
//!
//! Three coefficient modes are supported:
//!
//! * [`BigRational`] for everything that stays rational,
//! * [`Surd`] for exact arithmetic in the field spanned by real radicals
//!   `r^(1/k)` with `r` rational (needed by normalisation factors such as
//!   `(1/|G|)^(1/(n+1))` or `sqrt(15/8)`),
//! * `f64` where eigendecompositions make exactness impossible.
//!
//! A [`Surd`] keeps one rational coefficient per radical line. Two radicals
//! share a line when their ratio is rational; radicals on pairwise different
//! lines are linearly independent over the rationals, so a surd is zero iff
//! all of its coefficients are.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("radicand must be positive, got {0}")]
    NonPositiveRadicand(String),
    #[error("root index must be at least 1")]
    ZeroRootIndex,
    #[error("cannot parse rational from {0:?}")]
    BadRational(String),
}

/// Parse `"p"`, `"p/q"` or a decimal literal such as `"-0.25"` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational, ScalarError> {
    let t = s.trim();
    let bad = || ScalarError::BadRational(s.to_string());
    if t.is_empty() || t.len() > 4096 {
        return Err(bad());
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !int_digits.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || (int_digits.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let digits = format!("{int_digits}{frac}");
        let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both parts down for huge values.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

fn exact_uint_root(x: &BigUint, k: u32) -> Option<BigUint> {
    if k == 1 {
        return Some(x.clone());
    }
    let root = x.nth_root(k);
    if num_traits::pow(root.clone(), k as usize) == *x {
        Some(root)
    } else {
        None
    }
}

/// Exact `k`-th root of a positive rational, if it is rational.
fn exact_rational_root(r: &BigRational, k: u32) -> Option<BigRational> {
    let n = r.numer().to_biguint()?;
    let d = r.denom().to_biguint()?;
    let rn = exact_uint_root(&n, k)?;
    let rd = exact_uint_root(&d, k)?;
    Some(BigRational::new(BigInt::from_biguint(Sign::Plus, rn), BigInt::from_biguint(Sign::Plus, rd)))
}

fn prime_factors(mut k: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= k {
        if k % p == 0 {
            out.push(p);
            while k % p == 0 {
                k /= p;
            }
        }
        p += 1;
    }
    if k > 1 {
        out.push(k);
    }
    out
}

/// A positive real of the form `r^(1/k)` with `r > 0` rational and `k >= 1`.
///
/// Values are kept reduced: `k` is the smallest index for which the value's
/// `k`-th power is rational, so structural equality is value equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScaledScalar {
    r: BigRational,
    k: u32,
}

impl ScaledScalar {
    pub fn new(r: BigRational, k: u32) -> Result<Self, ScalarError> {
        if k == 0 {
            return Err(ScalarError::ZeroRootIndex);
        }
        if !r.is_positive() {
            return Err(ScalarError::NonPositiveRadicand(format_rational(&r)));
        }
        Ok(Self::reduced(r, k))
    }

    pub fn one() -> Self {
        Self { r: <BigRational as One>::one(), k: 1 }
    }

    pub fn from_integer(v: i64) -> Result<Self, ScalarError> {
        Self::new(BigRational::from_integer(v.into()), 1)
    }

    fn reduced(mut r: BigRational, mut k: u32) -> Self {
        for p in prime_factors(k) {
            while k % p == 0 {
                match exact_rational_root(&r, p) {
                    Some(root) => {
                        r = root;
                        k /= p;
                    }
                    None => break,
                }
            }
        }
        Self { r, k }
    }

    pub fn radicand(&self) -> &BigRational {
        &self.r
    }

    pub fn index(&self) -> u32 {
        self.k
    }

    pub fn is_one(&self) -> bool {
        self.k == 1 && self.r.is_one()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        (self.k == 1).then(|| self.r.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let l = self.k.lcm(&other.k);
        let a = num_traits::pow(self.r.clone(), (l / self.k) as usize);
        let b = num_traits::pow(other.r.clone(), (l / other.k) as usize);
        Self::reduced(a * b, l)
    }

    pub fn inv(&self) -> Self {
        Self { r: self.r.recip(), k: self.k }
    }

    pub fn pow(&self, e: u32) -> Self {
        Self::reduced(num_traits::pow(self.r.clone(), e as usize), self.k)
    }

    /// Positive square root, `r^(1/(2k))`.
    pub fn sqrt(&self) -> Self {
        Self::reduced(self.r.clone(), self.k * 2)
    }

    /// `self / other` when that quotient is rational.
    pub fn rational_ratio(&self, other: &Self) -> Option<BigRational> {
        self.mul(&other.inv()).as_rational()
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.r).powf(1.0 / self.k as f64)
    }
}

impl fmt::Display for ScaledScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.k {
            1 => write!(f, "{}", format_rational(&self.r)),
            2 => write!(f, "sqrt({})", format_rational(&self.r)),
            k => write!(f, "({})^(1/{k})", format_rational(&self.r)),
        }
    }
}

/// Serialized form `{"r": "num/den", "k": int}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScaledScalarJson {
    pub r: String,
    pub k: u32,
}

impl From<&ScaledScalar> for ScaledScalarJson {
    fn from(s: &ScaledScalar) -> Self {
        Self { r: format_rational(&s.r), k: s.k }
    }
}

impl TryFrom<&ScaledScalarJson> for ScaledScalar {
    type Error = ScalarError;
    fn try_from(j: &ScaledScalarJson) -> Result<Self, ScalarError> {
        if j.k > 64 {
            return Err(ScalarError::BadRational(format!("root index {} too large", j.k)));
        }
        ScaledScalar::new(parse_rational(&j.r)?, j.k)
    }
}

/// An exact element of the rational span of real radicals.
#[derive(Clone, Debug, Default)]
pub struct Surd {
    terms: Vec<(ScaledScalar, BigRational)>,
}

impl Surd {
    pub fn from_rational(r: BigRational) -> Self {
        let mut s = Self::default();
        s.accumulate(ScaledScalar::one(), r);
        s
    }

    pub fn from_scaled(s: ScaledScalar) -> Self {
        let mut out = Self::default();
        out.accumulate(s, <BigRational as One>::one());
        out
    }

    pub fn scaled(coeff: BigRational, s: ScaledScalar) -> Self {
        let mut out = Self::default();
        out.accumulate(s, coeff);
        out
    }

    pub fn terms(&self) -> &[(ScaledScalar, BigRational)] {
        &self.terms
    }

    fn accumulate(&mut self, s: ScaledScalar, c: BigRational) {
        if Zero::is_zero(&c) {
            return;
        }
        for idx in 0..self.terms.len() {
            if let Some(t) = s.rational_ratio(&self.terms[idx].0) {
                let sum = &self.terms[idx].1 + c * t;
                if Zero::is_zero(&sum) {
                    self.terms.swap_remove(idx);
                } else {
                    self.terms[idx].1 = sum;
                }
                return;
            }
        }
        self.terms.push((s, c));
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.as_slice() {
            [] => Some(<BigRational as Zero>::zero()),
            [(s, c)] => s.as_rational().map(|r| r * c),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|(s, c)| s.to_f64() * rational_to_f64(c)).sum()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.accumulate(s.clone(), c.clone());
        }
        out
    }

    pub fn negated(&self) -> Self {
        Self { terms: self.terms.iter().map(|(s, c)| (s.clone(), -c)).collect() }
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (s1, c1) in &self.terms {
            for (s2, c2) in &other.terms {
                out.accumulate(s1.mul(s2), c1 * c2);
            }
        }
        out
    }
}

impl PartialEq for Surd {
    fn eq(&self, other: &Self) -> bool {
        self.plus(&other.negated()).is_zero()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if s.is_one() {
                write!(f, "{}", format_rational(c))?;
            } else if c.is_one() {
                write!(f, "{s}")?;
            } else {
                write!(f, "{}*{s}", format_rational(c))?;
            }
        }
        Ok(())
    }
}

/// Coefficient field of a [`crate::polynomial::BlockPolynomial`].
pub trait Coefficient: Clone + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Whether equality tests in this mode are exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    /// `None` when the value is not representable in this mode.
    fn from_scaled(s: &ScaledScalar) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Exact equality for exact modes, relative tolerance `tol` for floats.
    fn close_to(&self, other: &Self, tol: f64) -> bool;

    /// Sign test; exact for rationals, through `f64` otherwise.
    fn is_negative(&self) -> bool {
        self.to_f64() < 0.0
    }

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negated())
    }

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(v.into()))
    }
}

impl Coefficient for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn from_scaled(s: &ScaledScalar) -> Option<Self> {
        s.as_rational()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Coefficient for Surd {
    const EXACT: bool = true;

    fn zero() -> Self {
        Surd::default()
    }
    fn one() -> Self {
        Surd::from_rational(<BigRational as One>::one())
    }
    fn is_zero(&self) -> bool {
        Surd::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        Surd::plus(self, other)
    }
    fn times(&self, other: &Self) -> Self {
        Surd::times(self, other)
    }
    fn negated(&self) -> Self {
        Surd::negated(self)
    }
    fn from_rational(r: &BigRational) -> Self {
        Surd::from_rational(r.clone())
    }
    fn from_scaled(s: &ScaledScalar) -> Option<Self> {
        Some(Surd::from_scaled(s.clone()))
    }
    fn to_f64(&self) -> f64 {
        Surd::to_f64(self)
    }
    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Coefficient for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negated(&self) -> Self {
        -self
    }
    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }
    fn from_scaled(s: &ScaledScalar) -> Option<Self> {
        Some(s.to_f64())
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol * self.abs().max(other.abs()).max(1.0)
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_perfect_powers() {
        let s = ScaledScalar::new(rat(4, 1), 4).unwrap();
        assert_eq!(s, ScaledScalar::new(rat(2, 1), 2).unwrap());
        let t = ScaledScalar::new(rat(8, 27), 3).unwrap();
        assert_eq!(t.as_rational(), Some(rat(2, 3)));
        assert!(ScaledScalar::new(rat(0, 1), 2).is_err());
        assert!(ScaledScalar::new(rat(1, 1), 0).is_err());
    }

    #[test]
    fn products_of_roots() {
        let a = ScaledScalar::new(rat(15, 8), 2).unwrap();
        assert_eq!(a.mul(&a).as_rational(), Some(rat(15, 8)));
        let half_root = ScaledScalar::new(rat(1, 2), 2).unwrap();
        let fourth = ScaledScalar::new(rat(2, 1), 4).unwrap();
        // 2^(1/4) * 2^(1/4) * 2^(-1/2) = 1
        assert!(fourth.mul(&fourth).mul(&half_root).is_one());
    }

    #[test]
    fn surd_cancellation_across_representatives() {
        // sqrt(8) - 2 sqrt(2) = 0
        let a = Surd::from_scaled(ScaledScalar::new(rat(8, 1), 2).unwrap());
        let b = Surd::scaled(rat(2, 1), ScaledScalar::new(rat(2, 1), 2).unwrap());
        assert!(a.plus(&b.negated()).is_zero());
        assert_eq!(a, b);
        // sqrt(2) * sqrt(3) is irrational, sqrt(2) * sqrt(8) = 4
        let r2 = Surd::from_scaled(ScaledScalar::new(rat(2, 1), 2).unwrap());
        let r3 = Surd::from_scaled(ScaledScalar::new(rat(3, 1), 2).unwrap());
        assert!(r2.times(&r3).as_rational().is_none());
        assert_eq!(r2.times(&a).as_rational(), Some(rat(4, 1)));
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational(".").is_err());
    }
}
