//! Exact arbitrary-precision rational numbers.
//!
//! Every numeric value in the dialect is a `Rational`: integer literals,
//! decimal literals (converted exactly, e.g. `0.5` is one half), and all
//! intermediate arithmetic. There is no floating point anywhere, so answers
//! computed over 12-digit operands come out exact.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact rational number, always stored reduced with a positive
/// denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    /// Build `numerator / denominator`. Returns `None` when the denominator
    /// is zero; the result is reduced and sign-normalized.
    pub fn new(numerator: BigInt, denominator: BigInt) -> Option<Self> {
        if denominator.is_zero() {
            None
        } else {
            Some(Rational(BigRational::new(numerator, denominator)))
        }
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Exact division; `None` when `rhs` is zero.
    pub fn checked_div(&self, rhs: &Rational) -> Option<Rational> {
        if rhs.is_zero() {
            None
        } else {
            Some(Rational(&self.0 / &rhs.0))
        }
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    /// Parses an integer or decimal literal, e.g. `"12"`, `"-3"`, `"0.5"`,
    /// `"1,234"` (thousands separators are ignored). Decimals convert
    /// exactly: `0.5` becomes one half, never a float.
    pub fn parse_decimal(text: &str) -> Option<Rational> {
        let cleaned: String = text.trim().chars().filter(|c| *c != ',').collect();
        if cleaned.is_empty() {
            return None;
        }
        let (sign, digits) = match cleaned.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => match cleaned.strip_prefix('+') {
                Some(rest) => (1, rest),
                None => (1, cleaned.as_str()),
            },
        };
        let mut parts = digits.splitn(2, '.');
        let int_part = parts.next()?;
        let frac_part = parts.next();
        match frac_part {
            None => {
                if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                let n = BigInt::from_str(int_part).ok()?;
                Some(Rational(BigRational::from_integer(n * sign)))
            }
            Some(frac) => {
                if int_part.is_empty() && frac.is_empty() {
                    return None;
                }
                if !int_part.bytes().all(|b| b.is_ascii_digit())
                    || !frac.bytes().all(|b| b.is_ascii_digit())
                {
                    return None;
                }
                let whole = if int_part.is_empty() {
                    BigInt::zero()
                } else {
                    BigInt::from_str(int_part).ok()?
                };
                let frac_digits = frac.len() as u32;
                let frac_value = if frac.is_empty() {
                    BigInt::zero()
                } else {
                    BigInt::from_str(frac).ok()?
                };
                let scale = BigInt::from(10u32).pow(frac_digits);
                let numer = (whole * &scale + frac_value) * sign;
                Some(Rational(BigRational::new(numer, scale)))
            }
        }
    }
}

impl fmt::Display for Rational {
    /// Integers render without a denominator (`12`), everything else as a
    /// literal fraction (`5/2`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl Div for &Rational {
    type Output = Rational;
    /// Panics on a zero divisor; use [`Rational::checked_div`] where the
    /// divisor is not known to be nonzero.
    fn div(self, rhs: &Rational) -> Rational {
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d)).unwrap()
    }

    #[test]
    fn reduced_and_sign_normalized() {
        let half = r(2, 4);
        assert_eq!(half.numerator(), &BigInt::from(1));
        assert_eq!(half.denominator(), &BigInt::from(2));
        let neg = r(3, -6);
        assert_eq!(neg.numerator(), &BigInt::from(-1));
        assert_eq!(neg.denominator(), &BigInt::from(2));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(Rational::new(BigInt::from(1), BigInt::from(0)).is_none());
    }

    #[test]
    fn integer_iff_denominator_one() {
        assert!(r(10, 2).is_integer());
        assert!(!r(21, 2).is_integer());
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(Rational::parse_decimal("0.5").unwrap(), r(1, 2));
        assert_eq!(Rational::parse_decimal("12.25").unwrap(), r(49, 4));
        assert_eq!(Rational::parse_decimal("-3.2").unwrap(), r(-16, 5));
        assert_eq!(
            Rational::parse_decimal("1,234").unwrap(),
            Rational::from_integer(1234)
        );
        assert!(Rational::parse_decimal("").is_none());
        assert!(Rational::parse_decimal("abc").is_none());
        assert!(Rational::parse_decimal("1.2.3").is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Rational::from_integer(12).to_string(), "12");
        assert_eq!(r(1, 2).to_string(), "1/2");
        assert_eq!(r(-5, 2).to_string(), "-5/2");
    }

    #[test]
    fn division_by_zero_checked() {
        assert!(r(1, 1).checked_div(&Rational::zero()).is_none());
        assert_eq!(r(1, 1).checked_div(&r(2, 1)).unwrap(), r(1, 2));
    }
}
