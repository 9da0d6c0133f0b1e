//! Exact rationals with an inline fast path.
//!
//! Values whose numerator and denominator fit in `i64` are kept inline and
//! combined through `i128` intermediates; anything larger spills to
//! [`BigRational`]. The representation is canonical (lowest terms, positive
//! denominator, inline whenever it fits), so structural equality and hashing
//! are value equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone)]
enum Repr {
    Small(i64, i64),
    Big(BigRational),
}

#[derive(Clone)]
pub struct ExactRational(Repr);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl ExactRational {
    /// Builds `num/den` in lowest terms. Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_i128(num as i128, den as i128)
    }

    pub fn from_integer(v: i64) -> Self {
        ExactRational(Repr::Small(v, 1))
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn half() -> Self {
        Self::new(1, 2)
    }

    pub fn from_bigints(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self::from_big(BigRational::new(num, den))
    }

    fn from_i128(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let neg = (num < 0) != (den < 0);
        let (un, ud) = (num.unsigned_abs(), den.unsigned_abs());
        let g = gcd_u128(un, ud).max(1);
        let (un, ud) = (un / g, ud / g);
        let min_mag = i64::MIN.unsigned_abs() as u128;
        if ud <= i64::MAX as u128 && (un <= i64::MAX as u128 || (neg && un == min_mag)) {
            let n = if neg { (un as i128).wrapping_neg() as i64 } else { un as i64 };
            ExactRational(Repr::Small(n, ud as i64))
        } else {
            let mut n = BigInt::from(un);
            if neg {
                n = -n;
            }
            ExactRational(Repr::Big(BigRational::new_raw(n, BigInt::from(ud))))
        }
    }

    fn from_big(r: BigRational) -> Self {
        // BigRational::new already reduces; demote when it fits inline.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => ExactRational(Repr::Small(n, d)),
            _ => ExactRational(Repr::Big(r)),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    /// Numerator and denominator when both fit in `i64`.
    pub fn as_i64_pair(&self) -> Option<(i64, i64)> {
        match &self.0 {
            Repr::Small(n, d) => Some((*n, *d)),
            Repr::Big(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(r) => r.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(r) => r.is_integer(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Repr::Big(r) => Self::from_big(r.recip()),
        }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(n.div_floor(d)),
            Repr::Big(r) => r.floor().to_integer(),
        }
    }

    pub fn floor_i64(&self) -> i64 {
        self.floor().to_i64().expect("floor out of i64 range")
    }

    pub fn ceil_i64(&self) -> i64 {
        -(-self).floor_i64()
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Integer power with a signed exponent.
    pub fn pow(&self, e: i32) -> Self {
        let base = if e < 0 { self.recip() } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }
}

impl Default for ExactRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for ExactRational {
    fn from(v: i64) -> Self {
        Self::from_integer(v)
    }
}

impl From<i32> for ExactRational {
    fn from(v: i32) -> Self {
        Self::from_integer(v as i64)
    }
}

impl From<u32> for ExactRational {
    fn from(v: u32) -> Self {
        Self::from_integer(v as i64)
    }
}

impl From<BigRational> for ExactRational {
    fn from(r: BigRational) -> Self {
        Self::from_big(r)
    }
}

impl From<ExactRational> for BigRational {
    fn from(r: ExactRational) -> Self {
        r.to_big()
    }
}

impl PartialEq for ExactRational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for ExactRational {}

impl Hash for ExactRational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(r) => {
                1u8.hash(state);
                r.hash(state);
            }
        }
    }
}

impl Ord for ExactRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                ((*a as i128) * (*d as i128)).cmp(&((*c as i128) * (*b as i128)))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for ExactRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl fmt::Debug for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactRational {
    type Err = ParseRationalError;

    /// Accepts `a`, `a/b` and finite decimals such as `-7.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        let bad = || ParseRationalError::Malformed(s.to_string());
        if let Some((a, b)) = s.split_once('/') {
            let n: BigInt = a.trim().parse().map_err(|_| bad())?;
            let d: BigInt = b.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(s.to_string()));
            }
            return Ok(Self::from_bigints(n, d));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = int.starts_with('-');
            let int_digits = int.trim_start_matches(['-', '+']);
            if !int_digits.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let digits = format!("{int_digits}{frac}");
            let mut n: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().map_err(|_| bad())?
            };
            if neg {
                n = -n;
            }
            let d = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Self::from_bigints(n, d));
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Ok(Self::from_bigints(n, BigInt::one()))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $small:expr, $big:expr) => {
        impl<'a> $trait<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
                    let f: fn(i128, i128, i128, i128) -> Option<(i128, i128)> = $small;
                    if let Some((n, den)) = f(*a as i128, *b as i128, *c as i128, *d as i128) {
                        return ExactRational::from_i128(n, den);
                    }
                }
                let g: fn(BigRational, BigRational) -> BigRational = $big;
                ExactRational::from_big(g(self.to_big(), rhs.to_big()))
            }
        }
        impl $trait<ExactRational> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a ExactRational> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                self.$method(&rhs)
            }
        }
        impl $trait<i64> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: i64) -> ExactRational {
                (&self).$method(&ExactRational::from_integer(rhs))
            }
        }
        impl<'a> $trait<i64> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: i64) -> ExactRational {
                self.$method(&ExactRational::from_integer(rhs))
            }
        }
    };
}

binop!(
    Add,
    add,
    |a, b, c, d| Some((a.checked_mul(d)?.checked_add(c.checked_mul(b)?)?, b.checked_mul(d)?)),
    |x, y| x + y
);
binop!(
    Sub,
    sub,
    |a, b, c, d| Some((a.checked_mul(d)?.checked_sub(c.checked_mul(b)?)?, b.checked_mul(d)?)),
    |x, y| x - y
);
binop!(
    Mul,
    mul,
    |a, b, c, d| Some((a.checked_mul(c)?, b.checked_mul(d)?)),
    |x, y| x * y
);
binop!(
    Div,
    div,
    |a, b, c, d| {
        assert!(c != 0, "division by zero");
        Some((a.checked_mul(d)?, b.checked_mul(c)?))
    },
    |x, y| {
        assert!(!y.is_zero(), "division by zero");
        x / y
    }
);

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        -&self
    }
}

impl Neg for &ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        match &self.0 {
            Repr::Small(n, d) => ExactRational::from_i128(-(*n as i128), *d as i128),
            Repr::Big(r) => ExactRational::from_big(-r.clone()),
        }
    }
}

impl std::iter::Sum for ExactRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// Shorthand constructor used throughout the crate and its tests.
pub fn rat(num: i64, den: i64) -> ExactRational {
    ExactRational::new(num, den)
}
