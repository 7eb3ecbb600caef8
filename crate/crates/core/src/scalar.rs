//! Exact scalar fields.
//!
//! Everything in this crate is generic over [`ExactField`], which is
//! implemented for the rationals ([`Rational`]) and for the Gaussian
//! rationals ([`GaussianRational`]), the complex numbers with rational real
//! and imaginary parts. Every equality and rank decision made on these types
//! is exact.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational number, always kept in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed scalar `{0}`")]
pub struct ParseScalarError(pub String);

/// A field with exact arithmetic and a conjugation.
///
/// The `Ord` bound is a total order used only to put values in a canonical
/// order (for instance sorting lattice atoms); it carries no algebraic
/// meaning for the complex field.
pub trait ExactField:
    Clone
    + Eq
    + Ord
    + Hash
    + Debug
    + Display
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    /// Whether the field contains a square root of -1.
    const IS_COMPLEX: bool;

    fn conj(&self) -> Self;
    fn add_ref(&self, rhs: &Self) -> Self;
    fn sub_ref(&self, rhs: &Self) -> Self;
    fn mul_ref(&self, rhs: &Self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;

    fn from_rational(q: Rational) -> Self;
    /// Builds `re + im·i`; `None` when `im ≠ 0` in a real field.
    fn from_parts(re: Rational, im: Rational) -> Option<Self>;
    fn re(&self) -> Rational;
    fn im(&self) -> Rational;
    /// Parses the canonical text form (`a/b` or `a/b+c/di`).
    fn parse_scalar(s: &str) -> Result<Self, ParseScalarError>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_rational(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_real(&self) -> bool {
        self.im().is_zero()
    }

    /// `|z|²`, always real.
    fn norm_sqr(&self) -> Self {
        self.mul_ref(&self.conj())
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = num.strip_prefix('+').unwrap_or(num);
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

fn write_rational(f: &mut fmt::Formatter<'_>, q: &Rational) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl ExactField for Rational {
    const IS_COMPLEX: bool = false;

    fn conj(&self) -> Self {
        self.clone()
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Rational::zero();
        }
        self * rhs
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_rational(q: Rational) -> Self {
        q
    }
    fn from_parts(re: Rational, im: Rational) -> Option<Self> {
        im.is_zero().then_some(re)
    }
    fn re(&self) -> Rational {
        self.clone()
    }
    fn im(&self) -> Rational {
        Rational::zero()
    }
    fn parse_scalar(s: &str) -> Result<Self, ParseScalarError> {
        parse_real(s)
    }
}

/// Complex number `re + im·i` with rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::zero(), Rational::one())
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational::new(re, Rational::zero())
    }
}

impl PartialOrd for GaussianRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GaussianRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

impl Zero for GaussianRational {
    fn zero() -> Self {
        GaussianRational::default()
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussianRational {
    fn one() -> Self {
        GaussianRational::real(Rational::one())
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianRational::new(-self.re, -self.im)
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        let im = if self.im.is_zero() && rhs.im.is_zero() {
            Rational::zero()
        } else {
            &self.im + &rhs.im
        };
        GaussianRational::new(&self.re + &rhs.re, im)
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        let im = if self.im.is_zero() && rhs.im.is_zero() {
            Rational::zero()
        } else {
            &self.im - &rhs.im
        };
        GaussianRational::new(&self.re - &rhs.re, im)
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        if self.is_zero() || rhs.is_zero() {
            return GaussianRational::zero();
        }
        match (self.im.is_zero(), rhs.im.is_zero()) {
            (true, true) => GaussianRational::real(&self.re * &rhs.re),
            (true, false) => GaussianRational::new(&self.re * &rhs.re, &self.re * &rhs.im),
            (false, true) => GaussianRational::new(&self.re * &rhs.re, &self.im * &rhs.re),
            (false, false) => GaussianRational::new(
                &self.re * &rhs.re - &self.im * &rhs.im,
                &self.re * &rhs.im + &self.im * &rhs.re,
            ),
        }
    }
}

impl<'a> Div<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        let inv = rhs.inv().expect("division by zero");
        self * &inv
    }
}

macro_rules! forward_owned {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: GaussianRational) -> GaussianRational {
                (&self).$method(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign for GaussianRational {
    fn add_assign(&mut self, rhs: Self) {
        *self = &*self + &rhs;
    }
}

impl SubAssign for GaussianRational {
    fn sub_assign(&mut self, rhs: Self) {
        *self = &*self - &rhs;
    }
}

impl MulAssign for GaussianRational {
    fn mul_assign(&mut self, rhs: Self) {
        *self = &*self * &rhs;
    }
}

impl ExactField for GaussianRational {
    const IS_COMPLEX: bool = true;

    fn conj(&self) -> Self {
        if self.im.is_zero() {
            self.clone()
        } else {
            GaussianRational::new(self.re.clone(), -self.im.clone())
        }
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(GaussianRational::real(self.re.recip()));
        }
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(GaussianRational::new(&self.re / &n, -(&self.im / &n)))
    }
    fn from_rational(q: Rational) -> Self {
        GaussianRational::real(q)
    }
    fn from_parts(re: Rational, im: Rational) -> Option<Self> {
        Some(GaussianRational::new(re, im))
    }
    fn re(&self) -> Rational {
        self.re.clone()
    }
    fn im(&self) -> Rational {
        self.im.clone()
    }
    fn parse_scalar(s: &str) -> Result<Self, ParseScalarError> {
        s.parse()
    }
}

impl Display for GaussianRational {
    /// Canonical text form: `a` or `a/b` when real, otherwise
    /// `re±|im|i` with the real part always present (`0+1i`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_rational(f, &self.re)?;
        if self.im.is_zero() {
            return Ok(());
        }
        f.write_str(if self.im.is_negative() { "-" } else { "+" })?;
        write_rational(f, &self.im.abs())?;
        f.write_str("i")
    }
}

impl Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(self, f)
    }
}

/// Splits `s` at the sign that separates the real and imaginary parts, if
/// any. A sign directly after the start is part of the real part.
fn split_complex(s: &str) -> (Option<&str>, &str) {
    let bytes = s.as_bytes();
    for idx in (1..bytes.len()).rev() {
        if bytes[idx] == b'+' || bytes[idx] == b'-' {
            return (Some(&s[..idx]), &s[idx..]);
        }
    }
    (None, s)
}

fn parse_imag(s: &str) -> Option<Rational> {
    let body = s.strip_suffix('i')?;
    match body.trim() {
        "" | "+" => Some(Rational::one()),
        "-" => Some(-Rational::one()),
        b => parse_rational(b),
    }
}

impl FromStr for GaussianRational {
    type Err = ParseScalarError;

    /// Accepts `a`, `a/b`, `a/b+c/di`, `c/di`, `i`, `-i` with optional signs;
    /// fractions need not be in lowest terms.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseScalarError(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(err());
        }
        if !t.ends_with('i') {
            return parse_rational(&t).map(GaussianRational::real).ok_or_else(err);
        }
        match split_complex(&t) {
            (Some(re), im) => {
                let re = parse_rational(re).ok_or_else(err)?;
                let im = parse_imag(im).ok_or_else(err)?;
                Ok(GaussianRational::new(re, im))
            }
            (None, im) => {
                let im = parse_imag(im).ok_or_else(err)?;
                Ok(GaussianRational::new(Rational::zero(), im))
            }
        }
    }
}

/// Parses a real scalar in the `a/b` text form.
pub fn parse_real(s: &str) -> Result<Rational, ParseScalarError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.ends_with('i') {
        let z: GaussianRational = t.parse()?;
        return if z.im.is_zero() {
            Ok(z.re)
        } else {
            Err(ParseScalarError(s.to_string()))
        };
    }
    parse_rational(&t).ok_or_else(|| ParseScalarError(s.to_string()))
}

/// Canonical text form of any exact scalar.
pub fn format_scalar<F: ExactField>(x: &F) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn parses_text_forms() {
        let z: GaussianRational = "2/4+3/6i".parse().unwrap();
        assert_eq!(z, GaussianRational::new(q(1, 2), q(1, 2)));
        let z: GaussianRational = "-1/3-2i".parse().unwrap();
        assert_eq!(z, GaussianRational::new(q(-1, 3), q(-2, 1)));
        let z: GaussianRational = "-i".parse().unwrap();
        assert_eq!(z, GaussianRational::new(q(0, 1), q(-1, 1)));
        let z: GaussianRational = "7".parse().unwrap();
        assert_eq!(z, GaussianRational::real(q(7, 1)));
        let z: GaussianRational = "+3/9i".parse().unwrap();
        assert_eq!(z, GaussianRational::new(q(0, 1), q(1, 3)));
        assert!("1/0".parse::<GaussianRational>().is_err());
        assert!("abc".parse::<GaussianRational>().is_err());
        assert!("".parse::<GaussianRational>().is_err());
    }

    #[test]
    fn canonical_display() {
        assert_eq!(GaussianRational::new(q(2, 4), q(-3, 1)).to_string(), "1/2-3i");
        assert_eq!(GaussianRational::i().to_string(), "0+1i");
        assert_eq!(GaussianRational::real(q(-6, 3)).to_string(), "-2");
        assert_eq!(format_scalar(&q(3, 9)), "1/3");
    }

    #[test]
    fn inverse_and_conjugate() {
        let z = GaussianRational::new(q(1, 2), q(3, 4));
        let w = z.inv().unwrap();
        assert_eq!(&z * &w, GaussianRational::one());
        assert_eq!(z.norm_sqr(), GaussianRational::real(q(13, 16)));
        assert!(GaussianRational::zero().inv().is_none());
        assert_eq!(&GaussianRational::i() * &GaussianRational::i(), -GaussianRational::one());
    }

    #[test]
    fn real_field_rejects_imaginary_parts() {
        assert!(<Rational as ExactField>::from_parts(q(1, 1), q(1, 1)).is_none());
        assert_eq!(parse_real("4/6").unwrap(), q(2, 3));
        assert!(parse_real("1+i").is_err());
    }
}
