use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_rational, Polynomial, Rational};

/// Newton polygon of a polynomial at a prime.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewtonPolygonReport {
    pub prime: u64,
    /// Lower-hull slopes (non-decreasing) with their horizontal lengths.
    #[serde(serialize_with = "ser_slopes")]
    pub slope_multiplicities: Vec<(Rational, usize)>,
}

fn ser_slopes<S: serde::Serializer>(v: &[(Rational, usize)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (slope, m) in v {
        seq.serialize_element(&serde_json::json!({
            "slope": fmt_rational(slope),
            "multiplicity": m,
            "abs_value": p_abs_string(slope),
        }))?;
    }
    seq.end()
}

fn p_abs_string(slope: &Rational) -> String {
    format!("p^{}", fmt_rational(slope))
}

impl NewtonPolygonReport {
    /// `sum slope * multiplicity` (exact).
    pub fn slope_sum(&self) -> Rational {
        self.slope_multiplicities
            .iter()
            .map(|(s, m)| s * Rational::from_integer(BigInt::from(*m)))
            .sum()
    }

    /// `|lambda|_p = p^slope` of the roots, with multiplicity.
    pub fn root_abs_values(&self) -> Vec<(f64, usize)> {
        let p = self.prime as f64;
        self.slope_multiplicities
            .iter()
            .map(|(s, m)| (p.powf(crate::exact::to_f64(s)), *m))
            .collect()
    }

    /// Exponent `e` with `prod_{|lambda|_p > 1} |lambda|_p = p^e` (an integer).
    pub fn expanding_exponent(&self) -> Rational {
        self.slope_multiplicities
            .iter()
            .filter(|(s, _)| s.is_positive())
            .map(|(s, m)| s * Rational::from_integer(BigInt::from(*m)))
            .sum()
    }
}

/// `p`-adic valuation of a nonzero rational.
pub fn valuation(r: &Rational, p: u64) -> i64 {
    assert!(!r.is_zero(), "valuation of zero");
    let pb = BigInt::from(p);
    let count = |n: &BigInt| {
        let mut n = n.abs();
        let mut k = 0i64;
        while n.is_multiple_of(&pb) {
            n /= &pb;
            k += 1;
        }
        k
    };
    count(r.numer()) - count(r.denom())
}

/// Lower convex hull of `{(i, v_p(c_i)) : c_i != 0}`.
pub fn newton_polygon(f: &Polynomial, p: u64) -> Result<NewtonPolygonReport> {
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    f.require_nonconstant()?;
    if f.coeff(0).is_zero() {
        return Err(Error::ZeroConstantTerm);
    }
    let pts: Vec<(i64, i64)> = f
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i as i64, valuation(c, p)))
        .collect();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b unless it lies strictly below segment a-pt.
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let slope_multiplicities = hull
        .windows(2)
        .map(|w| {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            (Rational::new(BigInt::from(dy), BigInt::from(dx)), dx as usize)
        })
        .collect();
    Ok(NewtonPolygonReport { prime: p, slope_multiplicities })
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Prime divisors of a nonzero integer (trial division).
pub fn prime_factors(n: &BigInt) -> Result<Vec<u64>> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut k = 2u64;
    while !n.is_one() && !n.is_zero() {
        if let Some(small) = n.to_u64() {
            if k.saturating_mul(k) > small {
                out.push(small);
                break;
            }
        }
        if k > 10_000_000 {
            return Err(Error::Budget(format!("cannot factor {n}")));
        }
        let kb = BigInt::from(k);
        if n.is_multiple_of(&kb) {
            out.push(k);
            while n.is_multiple_of(&kb) {
                n /= &kb;
            }
        }
        k += 1;
    }
    Ok(out)
}
