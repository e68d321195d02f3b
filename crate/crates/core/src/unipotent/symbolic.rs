use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{fmt_rational, parse_rational, to_f64, Rational};
use crate::torus::ExactPoint;

/// Real parameter that is rational, a quadratic irrational or a rational
/// multiple of `pi`. Irrational values are handled through certified
/// enclosures of any requested precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Param {
    Rational(Rational),
    /// `(a + b sqrt(c)) / d` with `b != 0`, `d > 0` and `c > 1` not a square.
    Quadratic { a: BigInt, b: BigInt, c: BigInt, d: BigInt },
    /// `r pi`, `r != 0`.
    PiMultiple(Rational),
}

impl Param {
    /// The golden ratio `(1 + sqrt 5) / 2`.
    pub fn golden() -> Self {
        Self::quadratic(1.into(), 1.into(), 5.into(), 2.into())
    }

    /// `(a + b sqrt(c)) / d`, reduced to a rational when `b = 0` or `c` is a
    /// perfect square.
    pub fn quadratic(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        assert!(!d.is_zero(), "zero denominator");
        assert!(!c.is_negative(), "negative radicand");
        let root = c.sqrt();
        if b.is_zero() || &root * &root == c {
            return Param::Rational(Rational::new(a + b * root, d));
        }
        let (a, b, d) = if d.is_negative() { (-a, -b, -d) } else { (a, b, d) };
        Param::Quadratic { a, b, c, d }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Param::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Param::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// `(lo, hi)` with `lo <= t <= hi` and `hi - lo <= 2^{-bits}`; for
    /// irrationals the inequalities are strict.
    pub fn enclosure(&self, bits: u64) -> (Rational, Rational) {
        match self {
            Param::Rational(r) => (r.clone(), r.clone()),
            Param::Quadratic { a, b, c, d } => {
                // b sqrt(c) = sign(b) sqrt(b^2 c); scale by 2^k with 2^k >= d.
                let k = bits + d.bits() + 1;
                let scale = BigInt::one() << k;
                let n = b * b * c * &scale * &scale;
                let r = n.sqrt();
                let den = Rational::from_integer(d * &scale);
                let base = Rational::from_integer(a * &scale);
                let (lo_root, hi_root) = (r.clone(), r + 1);
                if b.is_positive() {
                    ((&base + Rational::from_integer(lo_root)) / &den, (base + Rational::from_integer(hi_root)) / den)
                } else {
                    ((&base - Rational::from_integer(hi_root)) / &den, (base - Rational::from_integer(lo_root)) / den)
                }
            }
            Param::PiMultiple(r) => {
                let extra = r.numer().bits() + 2;
                let (lo, hi) = pi_enclosure(bits + extra);
                if r.is_positive() {
                    (r * lo, r * hi)
                } else {
                    (r * hi, r * lo)
                }
            }
        }
    }

    /// `floor(s t + h)` for rationals `s != 0`, `h`. Exact.
    pub fn floor_affine(&self, s: &Rational, h: &Rational) -> BigInt {
        if let Param::Rational(r) = self {
            return (s * r + h).floor().to_integer();
        }
        let mut bits = 64 + s.numer().bits();
        loop {
            let (lo, hi) = self.enclosure(bits);
            let (a, b) = if s.is_positive() { (s * lo + h, s * hi + h) } else { (s * hi + h, s * lo + h) };
            let (fa, fb) = (a.floor().to_integer(), b.floor().to_integer());
            // s t + h is irrational, so it is never an integer.
            if fa == fb {
                return fa;
            }
            bits *= 2;
        }
    }

    /// `round(s t)` (halves up).
    pub fn round_scaled(&self, s: &Rational) -> BigInt {
        self.floor_affine(s, &Rational::new(1.into(), 2.into()))
    }

    /// Dyadic rational within `2^{-bits}` of the value.
    pub fn approx(&self, bits: u64) -> Rational {
        match self {
            Param::Rational(r) => r.clone(),
            _ => {
                let scale = BigInt::one() << bits;
                let f = self.floor_affine(&Rational::from_integer(scale.clone()), &Rational::zero());
                Rational::new(f, scale)
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Param::Rational(r) => to_f64(r),
            _ => to_f64(&self.approx(80)),
        }
    }

    /// Parses a rational or decimal, `phi`, `pi` multiples (`pi`, `pi/4`,
    /// `3*pi/7`, `2/5*pi`) and quadratic irrationals (`sqrt(2)`,
    /// `(1+sqrt(5))/2`, `3-2*sqrt(7)`, `sqrt(2)/2`).
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("bad parameter '{s}'"));
        if t.is_empty() {
            return Err(bad());
        }
        if t == "phi" {
            return Ok(Self::golden());
        }
        if let Some(i) = t.find("pi") {
            let (left, right) = (&t[..i], &t[i + 2..]);
            let left = left.strip_suffix('*').unwrap_or(left);
            let num = match left {
                "" | "+" => Rational::one(),
                "-" => -Rational::one(),
                l => parse_rational(l).map_err(|_| bad())?,
            };
            let den = match right {
                "" => Rational::one(),
                r => parse_rational(r.strip_prefix('/').ok_or_else(bad)?).map_err(|_| bad())?,
            };
            if den.is_zero() {
                return Err(bad());
            }
            let r = num / den;
            return Ok(if r.is_zero() { Param::Rational(r) } else { Param::PiMultiple(r) });
        }
        if t.contains("sqrt(") {
            return parse_quadratic(&t).ok_or_else(bad);
        }
        Ok(Param::Rational(parse_rational(&t)?))
    }
}

fn parse_quadratic(t: &str) -> Option<Param> {
    // Optional trailing "/d" after a closing parenthesis.
    let (body, d) = match t.rfind('/') {
        Some(i) if t[..i].ends_with(')') => (&t[..i], t[i + 1..].parse::<BigInt>().ok()?),
        _ => (t, BigInt::one()),
    };
    let body = strip_outer_parens(body);
    let mut a = BigInt::zero();
    let mut radical: Option<(BigInt, BigInt)> = None;
    for term in split_terms(body) {
        let (sign, mag) = match term.strip_prefix('-') {
            Some(m) => (-1, m),
            None => (1, term.strip_prefix('+').unwrap_or(term)),
        };
        if let Some(i) = mag.find("sqrt(") {
            let inner = mag[i + 5..].strip_suffix(')')?;
            let coef = match &mag[..i] {
                "" => BigInt::one(),
                f => f.strip_suffix('*')?.parse().ok()?,
            };
            if radical.is_some() {
                return None;
            }
            radical = Some((coef * sign, inner.parse().ok()?));
        } else {
            a += mag.parse::<BigInt>().ok()? * sign;
        }
    }
    let (b, c) = radical?;
    if c.is_negative() || d.is_zero() {
        return None;
    }
    Some(Param::quadratic(a, b, c, d))
}

fn strip_outer_parens(s: &str) -> &str {
    if !(s.starts_with('(') && s.ends_with(')')) {
        return s;
    }
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth == 0 && i + 1 < s.len() {
            return s;
        }
    }
    &s[1..s.len() - 1]
}

/// Splits at top-level `+`/`-`, keeping the sign with each term.
fn split_terms(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' | '-' if depth == 0 && i > start => {
                out.push(&s[start..i]);
                start = i;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Enclosure of `pi` of width at most `2^{-bits}` from Machin's formula
/// `pi = 16 atan(1/5) - 4 atan(1/239)` in fixed point.
fn pi_enclosure(bits: u64) -> (Rational, Rational) {
    let guard = 16u64;
    let one = BigInt::one() << (bits + guard);
    let (a5, n5) = atan_inv(5, &one);
    let (a239, n239) = atan_inv(239, &one);
    let approx = a5 * 16 - a239 * 4;
    // Each truncated term is off by at most one unit; the series tails are
    // bounded by their first omitted term, also at most one unit.
    let err = BigInt::from(16 * (n5 + 2) + 4 * (n239 + 2));
    let den = one;
    (Rational::new(&approx - &err, den.clone()), Rational::new(approx + err, den))
}

/// `atan(1/x)` scaled by `one`, truncated termwise, with the term count.
fn atan_inv(x: u64, one: &BigInt) -> (BigInt, u64) {
    let x2 = BigInt::from(x * x);
    let mut power = one / BigInt::from(x);
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_even() {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    (sum, k)
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Rational(r) => write!(f, "{}", fmt_rational(r)),
            Param::Quadratic { a, b, c, d } => {
                let sign = if b.is_negative() { '-' } else { '+' };
                let mag = b.abs();
                let radical = if mag.is_one() { format!("sqrt({c})") } else { format!("{mag}*sqrt({c})") };
                if d.is_one() {
                    write!(f, "{a}{sign}{radical}")
                } else {
                    write!(f, "({a}{sign}{radical})/{d}")
                }
            }
            Param::PiMultiple(r) => write!(f, "{}*pi", fmt_rational(r)),
        }
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Point of `T^d` whose coordinates are [`Param`]s (read mod 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicPoint {
    pub coords: Vec<Param>,
}

impl SymbolicPoint {
    pub fn new(coords: Vec<Param>) -> Self {
        Self { coords }
    }

    pub fn from_exact(p: &ExactPoint) -> Self {
        Self { coords: p.coords().into_iter().map(Param::Rational).collect() }
    }

    /// Comma-separated [`Param`]s.
    pub fn parse(s: &str) -> Result<Self> {
        let coords = s.split(',').map(Param::parse).collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The exact point when every coordinate is rational.
    pub fn as_exact(&self) -> Option<ExactPoint> {
        let c: Option<Vec<Rational>> = self.coords.iter().map(|p| p.as_rational().cloned()).collect();
        c.map(|c| ExactPoint::new(&c))
    }

    pub fn is_exact(&self) -> bool {
        self.coords.iter().all(Param::is_rational)
    }

    /// Dyadic approximation within `2^{-bits}` in every coordinate.
    pub fn approx(&self, bits: u64) -> ExactPoint {
        let c: Vec<Rational> = self.coords.iter().map(|p| p.approx(bits)).collect();
        ExactPoint::new(&c)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|p| crate::torus::reduce_f64(p.to_f64())).collect()
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(Param::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for SymbolicPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn parses_forms() {
        assert_eq!(Param::parse("1/2").unwrap(), Param::Rational(rat(1, 2)));
        assert_eq!(Param::parse("0.25").unwrap(), Param::Rational(rat(1, 4)));
        assert_eq!(Param::parse("phi").unwrap(), Param::golden());
        assert_eq!(Param::parse("(1+sqrt(5))/2").unwrap(), Param::golden());
        assert_eq!(Param::parse("sqrt(4)").unwrap(), Param::Rational(rat(2, 1)));
        assert!((Param::parse("3-2*sqrt(7)").unwrap().to_f64() - (3.0 - 2.0 * 7f64.sqrt())).abs() < 1e-12);
        assert!((Param::parse("sqrt(2)/2").unwrap().to_f64() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((Param::parse("-sqrt(3)").unwrap().to_f64() + 3f64.sqrt()).abs() < 1e-12);
        assert!((Param::parse("sqrt(3)-1").unwrap().to_f64() - (3f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((Param::parse("3*pi/7").unwrap().to_f64() - 3.0 * std::f64::consts::PI / 7.0).abs() < 1e-12);
        assert!((Param::parse("2/5*pi").unwrap().to_f64() - 0.4 * std::f64::consts::PI).abs() < 1e-12);
        assert!(Param::parse("sqrt(x)").is_err());
        for s in ["phi", "3-2*sqrt(7)", "(1-sqrt(2))/3", "3/7*pi"] {
            let p = Param::parse(s).unwrap();
            assert_eq!(Param::parse(&p.to_string()).unwrap(), p);
        }
    }

    #[test]
    fn enclosures_are_tight_and_correct() {
        // Digits of pi and sqrt(2) from a high-precision reference.
        let pi = Param::PiMultiple(rat(1, 1));
        let (lo, hi) = pi.enclosure(200);
        let r: Rational = parse_rational("3.14159265358979323846264338327950288419716939937510582097494459").unwrap();
        let ulp = Rational::new(1.into(), BigInt::from(10).pow(60));
        assert!(lo < &r + &ulp && r < hi);
        assert!(&hi - &lo <= Rational::new(1.into(), BigInt::one() << 200));
        let q = Param::parse("sqrt(2)").unwrap();
        let (lo, hi) = q.enclosure(100);
        assert!(&lo * &lo < rat(2, 1) && &hi * &hi > rat(2, 1));
    }

    #[test]
    fn rounding_matches_integer_arithmetic() {
        // round(n sqrt 2) via isqrt(2 n^2) for many n.
        let q = Param::parse("sqrt(2)").unwrap();
        for n in 1..300i64 {
            let want = (BigInt::from(2 * n * n)).sqrt();
            let f = q.floor_affine(&rat(n, 1), &Rational::zero());
            assert_eq!(f, want, "n = {n}");
        }
        let g = Param::golden();
        assert_eq!(g.round_scaled(&rat(10, 1)), BigInt::from(16));
    }
}
