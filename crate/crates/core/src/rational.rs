//! Exact rational scalars and their text form.
//!
//! Rationals are the substrate for everything that must be checked with zero
//! tolerance: mean weights, the λ parameter constraints, and the coefficients
//! of [`crate::hamel::HamelNumber`]. The text form is `"num/den"` (or a bare
//! integer), which is also how rationals appear in mean-expression JSON and
//! on the command line.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {text:?} as a rational (expected \"num/den\" or an integer)")]
pub struct ParseRationalError {
    pub text: String,
}

/// Shorthand for small rational constants.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"num/den"` or a bare integer into a reduced rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        text: text.to_owned(),
    };
    let s = text.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational as `"num/den"`, or as a bare integer when the
/// denominator is 1. `parse_rational` accepts everything this emits.
pub fn format_rational(q: &Rational) -> String {
    if q.denom() == &BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Nearest binary64 image of a rational.
pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite binary64 (every finite float is a
/// dyadic rational). Returns `None` for NaN or infinities.
pub fn f64_to_rational(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// True when a rational is a dyadic (denominator a power of two).
pub fn is_dyadic(q: &Rational) -> bool {
    let mut d = q.denom().abs();
    let two = BigInt::from(2);
    while (&d % &two).is_zero() {
        d /= &two;
    }
    d == BigInt::from(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for text in ["3", "-3", "1/2", "-7/5", "0"] {
            let q = parse_rational(text).unwrap();
            assert_eq!(format_rational(&q), text);
        }
        // reduction and sign normalization
        assert_eq!(format_rational(&parse_rational("2/4").unwrap()), "1/2");
        assert_eq!(format_rational(&parse_rational("1/-2").unwrap()), "-1/2");
    }

    #[test]
    fn rejects_malformed_text() {
        for text in ["", "1/0", "a/2", "1/2/3", "1.5"] {
            assert!(parse_rational(text).is_err(), "accepted {text:?}");
        }
    }

    #[test]
    fn float_lift_is_exact() {
        let q = f64_to_rational(0.380859375).unwrap();
        assert_eq!(q, rat(195, 512));
        assert_eq!(rational_to_f64(&q), 0.380859375);
        assert!(is_dyadic(&q));
        assert!(f64_to_rational(f64::NAN).is_none());
    }

    #[test]
    fn dyadic_detection() {
        assert!(is_dyadic(&rat(3, 8)));
        assert!(is_dyadic(&rat(-5, 1)));
        assert!(!is_dyadic(&rat(1, 3)));
        assert!(!is_dyadic(&rat(7, 12)));
    }
}
