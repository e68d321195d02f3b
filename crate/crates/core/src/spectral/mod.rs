//! Archimedean splittings, adapted norms, Newton polygons and the
//! polynomial-level constructions built on them.

mod arith;
mod newton;
mod period_set;
mod roots;
mod splitting;

pub use arith::{cyclotomic, has_rational_root, irreducibility, root_of_unity_order, totient, Irreducibility};
pub use newton::{newton_polygon, prime_factors, valuation, NewtonPolygonReport};
pub use period_set::{bounded_below_set, PeriodSet};
pub use roots::complex_roots;
pub use splitting::{archimedean_splitting, Block, Regime, Splitting, UNIMODULAR_THRESHOLD};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{RatMatrix, Rational};
use crate::exact::Polynomial;
use crate::torus::{difference_f64, TorusPoint};

/// Adapted quotient distance on `T^d`: the minimum of the adapted norm over
/// lattice translates of `x - y`.
pub fn adapted_distance(s: &Splitting, x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    x.check_dim(s.dim())?;
    y.check_dim(s.dim())?;
    Ok(s.quotient_norm(&difference_f64(x, y)))
}

/// Outcome of the product-formula check for the expanding eigenvalues.
#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub ell: BigInt,
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub finite_product: BigInt,
    pub per_prime: Vec<NewtonPolygonReport>,
    pub max_archimedean_abs: f64,
    pub archimedean_has_expansion: bool,
    pub irreducibility: Irreducibility,
    pub holds: bool,
}

/// Product over finite primes of the expanding `|lambda|_p` of the monic
/// normalization of `f`, compared against the lcm of its denominators.
///
/// `assume_irreducible` overrides the irreducibility heuristic.
pub fn unstable_product_check(f: &Polynomial, assume_irreducible: Option<bool>) -> Result<ProductReport> {
    f.require_nonconstant()?;
    if f.coeff(0).is_zero() {
        return Err(Error::ZeroConstantTerm);
    }
    let irreducibility = match assume_irreducible {
        Some(true) => Irreducibility::Irreducible,
        Some(false) => Irreducibility::Reducible,
        None => arith::irreducibility(f),
    };
    if irreducibility == Irreducibility::Reducible {
        return Err(Error::Reducible(f.to_string()));
    }
    if let Some(order) = root_of_unity_order(f) {
        return Err(Error::RootOfUnity { order });
    }
    let g = f.monic();
    let ell = g.denominator_lcm();
    let mut finite_product = BigInt::one();
    let mut per_prime = Vec::new();
    for p in prime_factors(&ell)? {
        let report = newton_polygon(&g, p)?;
        let e = report.expanding_exponent();
        if !e.is_integer() {
            return Err(Error::Verification(format!("non-integral expanding exponent at {p}")));
        }
        let e: u32 = e
            .to_integer()
            .try_into()
            .map_err(|_| Error::Budget("expanding exponent too large".into()))?;
        finite_product *= BigInt::from(p).pow(e);
        per_prime.push(report);
    }
    let max_abs = complex_roots(&g).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let expands = max_abs > 1.0 + UNIMODULAR_THRESHOLD;
    let holds = finite_product == ell && (!ell.is_one() || expands);
    Ok(ProductReport {
        ell,
        finite_product,
        per_prime,
        max_archimedean_abs: max_abs,
        archimedean_has_expansion: expands,
        irreducibility,
        holds,
    })
}

/// Companion matrix of the monic normalization and its prime set.
#[derive(Clone, Debug, Serialize)]
pub struct CompanionSystem {
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub matrix: RatMatrix,
    /// Finite primes dividing denominators of `A` or `A^{-1}`; `infinity`
    /// is always included and not listed.
    pub finite_primes: Vec<u64>,
}

impl CompanionSystem {
    /// `S` as text, e.g. `{2, inf}`.
    pub fn places(&self) -> Vec<String> {
        self.finite_primes
            .iter()
            .map(u64::to_string)
            .chain(std::iter::once("inf".to_string()))
            .collect()
    }
}

/// Companion matrix `A` of `f / c_d` with `A[i+1][i] = 1` and last column
/// `-g_0, ..., -g_{d-1}`; the char poly of `A` is `f / c_d`.
pub fn companion_system(f: &Polynomial) -> Result<CompanionSystem> {
    f.require_nonconstant()?;
    if f.coeff(0).is_zero() {
        return Err(Error::ZeroConstantTerm);
    }
    let g = f.monic();
    let d = g.degree();
    let mut a = RatMatrix::zeros(d, d);
    for i in 1..d {
        a.set(i, i - 1, Rational::one());
    }
    for i in 0..d {
        a.set(i, d - 1, -g.coeff(i));
    }
    let inv = a.inverse()?;
    let dens = a.common_denominator() * inv.common_denominator();
    let finite_primes = prime_factors(&dens)?;
    Ok(CompanionSystem { matrix: a, finite_primes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{char_poly, rat};

    #[test]
    fn companion_examples() {
        let c = companion_system(&Polynomial::from_i64(&[1, -3, 1])).unwrap();
        assert_eq!(c.matrix, RatMatrix::parse("0,-1;1,3").unwrap());
        assert!(c.finite_primes.is_empty());
        let c = companion_system(&Polynomial::from_i64(&[-1, -3, 2])).unwrap();
        assert_eq!(char_poly(&c.matrix).unwrap(), Polynomial::new(vec![rat(-1, 2), rat(-3, 2), rat(1, 1)]));
        assert_eq!(c.finite_primes, vec![2]);
        let c = companion_system(&Polynomial::from_i64(&[-2, 1])).unwrap();
        assert_eq!(c.matrix, RatMatrix::parse("2").unwrap());
        assert_eq!(c.places(), vec!["2", "inf"]);
    }

    #[test]
    fn product_formula_examples() {
        let r = unstable_product_check(&Polynomial::from_i64(&[-1, -3, 2]), None).unwrap();
        assert_eq!(r.ell, BigInt::from(2));
        assert_eq!(r.finite_product, BigInt::from(2));
        assert!((r.max_archimedean_abs - (3.0 + 17f64.sqrt()) / 4.0).abs() < 1e-12);
        let r = unstable_product_check(&Polynomial::from_i64(&[1, -3, 1]), None).unwrap();
        assert!(r.ell.is_one() && r.finite_product.is_one() && r.archimedean_has_expansion);
        assert!(matches!(
            unstable_product_check(&Polynomial::from_i64(&[1, -1, 1]), None),
            Err(Error::RootOfUnity { order: 6 })
        ));
    }

    #[test]
    fn adapted_distance_is_zero_on_diagonal() {
        let s = archimedean_splitting(&RatMatrix::parse("2,1;1,1").unwrap(), 1e-9).unwrap();
        let x = TorusPoint::parse("0.3,0.8").unwrap();
        assert_eq!(adapted_distance(&s, &x, &x).unwrap(), 0.0);
    }
}
