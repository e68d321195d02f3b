use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{fmt_rational, from_f64, lcm_denominators, parse_rational, IntMatrix, Rational};

/// Exact point of `T^d` stored over a common denominator: coordinate `i` is
/// `num[i] / den` with `0 <= num[i] < den` and `gcd(den, num...) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactPoint {
    num: Vec<BigInt>,
    den: BigInt,
}

impl ExactPoint {
    pub fn new(coords: &[Rational]) -> Self {
        let den = lcm_denominators(coords);
        let num = coords.iter().map(|c| (c * &den).to_integer()).collect();
        Self::from_parts(num, den)
    }

    /// Normalizes `num / den` modulo 1. Panics if `den <= 0`.
    pub fn from_parts(num: Vec<BigInt>, den: BigInt) -> Self {
        assert!(den.is_positive(), "denominator must be positive");
        let mut num: Vec<BigInt> = num.into_iter().map(|n| n.mod_floor(&den)).collect();
        let g = num.iter().fold(den.clone(), |g, n| crate::exact::gcd(&g, n));
        let mut den = den;
        if !g.is_one() {
            for n in &mut num {
                *n /= &g;
            }
            den /= &g;
        }
        Self { num, den }
    }

    pub fn zero(dim: usize) -> Self {
        Self { num: vec![BigInt::zero(); dim], den: BigInt::one() }
    }

    pub fn dim(&self) -> usize {
        self.num.len()
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn coords(&self) -> Vec<Rational> {
        self.num.iter().map(|n| Rational::new(n.clone(), self.den.clone())).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords().iter().map(crate::exact::to_f64).collect()
    }

    /// Image under an integer matrix, reduced mod 1.
    pub fn apply(&self, a: &IntMatrix) -> Self {
        Self::from_parts(a.mul_vec(&self.num), self.den.clone())
    }

    /// Image under an integer matrix whose determinant is a unit modulo the
    /// denominator (no gcd reduction needed).
    pub(crate) fn apply_unimodular(&self, a: &IntMatrix) -> Self {
        let num = a.mul_vec(&self.num).into_iter().map(|n| n.mod_floor(&self.den)).collect();
        Self { num, den: self.den.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let den = &self.den * &other.den;
        let num = self
            .num
            .iter()
            .zip(&other.num)
            .map(|(a, b)| a * &other.den + b * &self.den)
            .collect();
        Self::from_parts(num, den)
    }

    pub fn neg(&self) -> Self {
        Self::from_parts(self.num.iter().map(|n| -n).collect(), self.den.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// `self - other` lifted to `[-1/2, 1/2)^d`, exactly.
    pub fn centered_diff(&self, other: &Self) -> Vec<Rational> {
        let den = &self.den * &other.den;
        let half = &den / 2u32;
        self.num
            .iter()
            .zip(&other.num)
            .map(|(a, b)| {
                let n = (a * &other.den - b * &self.den + &half).mod_floor(&den) - &half;
                crate::exact::reduced(n, den.clone())
            })
            .collect()
    }

    /// Nearest point on the grid `2^{-bits} Z^d` (ties toward +infinity).
    pub fn round_to_bits(&self, bits: u64) -> Self {
        let scale = BigInt::one() << bits;
        let num = self
            .num
            .iter()
            .map(|n| (n * &scale * 2u32 + &self.den).div_floor(&(&self.den * 2)))
            .collect();
        Self::from_parts(num, scale)
    }

    /// Lift of the coordinates in `[0,1)` as rationals.
    pub fn lift(&self) -> Vec<Rational> {
        self.coords()
    }
}

/// Point of `T^d = R^d / Z^d`, exact or floating.
#[derive(Clone, Debug, PartialEq)]
pub enum TorusPoint {
    Exact(ExactPoint),
    Float(Vec<f64>),
}

impl TorusPoint {
    /// Exact point from rational coordinates (reduced mod 1).
    pub fn exact(coords: &[Rational]) -> Self {
        TorusPoint::Exact(ExactPoint::new(coords))
    }

    /// Exact point from `(numerator, denominator)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Self {
        let c: Vec<Rational> = pairs.iter().map(|&(n, d)| crate::exact::rat(n, d)).collect();
        Self::exact(&c)
    }

    /// Float point, reduced mod 1.
    pub fn float(coords: &[f64]) -> Self {
        TorusPoint::Float(coords.iter().map(|&x| reduce_f64(x)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        TorusPoint::Exact(ExactPoint::zero(dim))
    }

    /// Parses `"1/2,0,1/2"` (exact) or `"0.25,0.5"` (float when any
    /// coordinate is written with a decimal point or exponent).
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Parse(format!("bad point '{s}'")));
        }
        let is_float = parts
            .iter()
            .any(|p| !p.contains('/') && p.contains(['.', 'e', 'E']));
        if is_float {
            let v = parts
                .iter()
                .map(|p| p.parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate '{p}'"))))
                .collect::<Result<Vec<_>>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse(format!("non-finite coordinate in '{s}'")));
            }
            Ok(Self::float(&v))
        } else {
            let v = parts.iter().map(|p| parse_rational(p)).collect::<Result<Vec<_>>>()?;
            Ok(Self::exact(&v))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Exact(p) => p.dim(),
            TorusPoint::Float(v) => v.len(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, TorusPoint::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&ExactPoint> {
        match self {
            TorusPoint::Exact(p) => Some(p),
            TorusPoint::Float(_) => None,
        }
    }

    /// Exact version; float coordinates are converted without rounding.
    pub fn to_exact(&self) -> ExactPoint {
        match self {
            TorusPoint::Exact(p) => p.clone(),
            TorusPoint::Float(v) => {
                let c: Vec<Rational> = v.iter().map(|&x| from_f64(x).expect("finite")).collect();
                ExactPoint::new(&c)
            }
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TorusPoint::Exact(p) => p.to_f64(),
            TorusPoint::Float(v) => v.clone(),
        }
    }

    /// Image under an integer matrix; exact points stay exact.
    pub fn apply(&self, a: &IntMatrix) -> Self {
        match self {
            TorusPoint::Exact(p) => TorusPoint::Exact(p.apply(a)),
            TorusPoint::Float(v) => {
                let out: Vec<f64> = (0..a.rows())
                    .map(|i| {
                        let s: f64 = a
                            .row(i)
                            .iter()
                            .zip(v)
                            .map(|(c, x)| c.to_f64().unwrap_or(f64::NAN) * x)
                            .sum();
                        reduce_f64(s)
                    })
                    .collect();
                TorusPoint::Float(out)
            }
        }
    }

    /// `self + other` mod 1; exact iff both are exact.
    pub fn add(&self, other: &TorusPoint) -> TorusPoint {
        match (self, other) {
            (TorusPoint::Exact(a), TorusPoint::Exact(b)) => TorusPoint::Exact(a.add(b)),
            _ => {
                let v: Vec<f64> =
                    self.to_f64().iter().zip(other.to_f64()).map(|(a, b)| a + b).collect();
                TorusPoint::float(&v)
            }
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.dim() });
        }
        Ok(())
    }
}

/// `x - floor(x)`, mapped into `[0, 1)` even when rounding gives 1.
pub fn reduce_f64(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = match self {
            TorusPoint::Exact(p) => p.coords().iter().map(fmt_rational).collect(),
            TorusPoint::Float(v) => v.iter().map(|x| format!("{x:?}")).collect(),
        };
        write!(f, "{}", parts.join(","))
    }
}

impl Serialize for TorusPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl From<ExactPoint> for TorusPoint {
    fn from(p: ExactPoint) -> Self {
        TorusPoint::Exact(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn normalization() {
        let p = ExactPoint::new(&[rat(3, 2), rat(-1, 3)]);
        assert_eq!(p.coords(), vec![rat(1, 2), rat(2, 3)]);
        assert_eq!(p.denominator(), &BigInt::from(6));
        let q = ExactPoint::from_parts(vec![BigInt::from(2), BigInt::from(4)], BigInt::from(8));
        assert_eq!(q.denominator(), &BigInt::from(4));
    }

    #[test]
    fn parse_and_display() {
        let p = TorusPoint::parse("1/2, 0 ,3/2").unwrap();
        assert!(p.is_exact());
        assert_eq!(p.to_string(), "1/2,0,1/2");
        let f = TorusPoint::parse("0.25,1.5").unwrap();
        assert_eq!(f, TorusPoint::Float(vec![0.25, 0.5]));
        assert!(TorusPoint::parse("1,,2").is_err());
        assert!(TorusPoint::parse("inf,0.5").is_err());
    }

    #[test]
    fn centered_difference_wraps() {
        let a = ExactPoint::new(&[rat(9, 10), rat(0, 1)]);
        let b = ExactPoint::new(&[rat(1, 10), rat(1, 2)]);
        assert_eq!(a.centered_diff(&b), vec![rat(-1, 5), rat(-1, 2)]);
    }

    #[test]
    fn float_to_exact_is_lossless() {
        let p = TorusPoint::float(&[0.1, 0.7]);
        assert_eq!(p.to_exact().to_f64(), vec![0.1, 0.7]);
    }

    #[test]
    fn rounding_to_dyadic_grid() {
        let p = ExactPoint::new(&[rat(1, 3)]);
        let r = p.round_to_bits(4);
        assert_eq!(r.coords(), vec![rat(5, 16)]);
    }
}
