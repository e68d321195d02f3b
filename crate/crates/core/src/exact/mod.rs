//! Exact rational and integer linear algebra.
//!
//! Everything here stays in arbitrary precision: determinants and inverses go
//! through fraction-free (Bareiss) elimination, characteristic polynomials are
//! Bareiss determinants over `Z[x]`, and the Smith and unipotent Jordan forms
//! are built from integer row/column operations and rational kernel chains.

mod int_matrix;
mod jordan;
mod linalg;
mod matrix;
mod poly;
pub(crate) mod smith;

pub use int_matrix::IntMatrix;
pub use jordan::jordan_unipotent;
pub use linalg::{kernel, rank, rref};
pub use matrix::{char_poly, exact_inverse, RatMatrix};
pub use poly::Polynomial;
pub use smith::{smith_normal_form, SmithForm};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Reduced fraction with arbitrary-precision numerator and positive denominator.
pub type Rational = BigRational;

/// `n/d` as a reduced rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.25"` or `"1e-3"`.
/// Decimals are converted exactly (`"0.2"` is `1/5`).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in '{s}'")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in '{s}'")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    parse_decimal(s).ok_or_else(|| Error::Parse(format!("not a number: '{s}'")))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fracpart) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && fracpart.is_empty() {
        return None;
    }
    if !whole.chars().chain(fracpart.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{whole}{fracpart}").parse().ok()?;
    let scale = exp - fracpart.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Fractional part in `[0, 1)`.
pub fn frac(r: &Rational) -> Rational {
    r - r.floor()
}

/// Nearest value of `r` in `[-1/2, 1/2)` modulo 1.
pub fn centered_frac(r: &Rational) -> Rational {
    let half = rat(1, 2);
    let f = frac(&(r + &half));
    f - half
}

/// Least common multiple of the denominators.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, r| {
        let g = gcd(&acc, r.denom());
        acc / g * r.denom()
    })
}

/// Non-negative gcd. Powers of two take a shift-only path, since the
/// binary algorithm needs one pass per bit when one operand is `2^k`.
pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (a, b) = (a.abs(), b.abs());
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    let (ta, tb) = (a.trailing_zeros().unwrap_or(0), b.trailing_zeros().unwrap_or(0));
    if a.bits() == ta + 1 || b.bits() == tb + 1 {
        return BigInt::one() << ta.min(tb);
    }
    let (small, large) = if a.bits() <= b.bits() { (a, b) } else { (b, a) };
    let rest = large % &small;
    small.gcd(&rest)
}

/// `n / d` reduced with [`gcd`]. Panics if `d == 0`.
pub fn reduced(n: BigInt, d: BigInt) -> Rational {
    assert!(!d.is_zero(), "zero denominator");
    let g = gcd(&n, &d);
    let (mut n, mut d) = (n / &g, d / g);
    if d.is_negative() {
        n = -n;
        d = -d;
    }
    Rational::new_raw(n, d)
}

/// Correctly rounded conversion (large or tiny values saturate as `f64` does).
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite float {x}")))
}

/// `floor(a / b)` for integers with `b > 0`.
pub(crate) fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// Formats a rational as `p/q` or `p`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_number_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.2").unwrap(), rat(1, 5));
        assert_eq!(parse_rational("-1.5e-1").unwrap(), rat(-3, 20));
        assert_eq!(parse_rational("2E2").unwrap(), int(200));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn fractional_parts() {
        assert_eq!(frac(&rat(-1, 3)), rat(2, 3));
        assert_eq!(centered_frac(&rat(3, 4)), rat(-1, 4));
        assert_eq!(centered_frac(&rat(1, 2)), rat(-1, 2));
        assert_eq!(centered_frac(&rat(7, 3)), rat(1, 3));
    }

    #[test]
    fn float_round_trip_is_exact() {
        let x = 0.1_f64;
        assert_eq!(to_f64(&from_f64(x).unwrap()), x);
        assert!(from_f64(f64::NAN).is_err());
    }
}
