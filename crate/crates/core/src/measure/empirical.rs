use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{fmt_rational, to_f64, Rational};
use crate::torus::{ExactPoint, ToralAutomorphism};

/// Finitely supported probability measure on `T^d` with exact weights.
/// Atoms are kept sorted and distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalMeasure {
    dim: usize,
    atoms: Vec<(ExactPoint, Rational)>,
}

impl EmpiricalMeasure {
    /// Merges equal points and checks that the weights are positive with
    /// total 1.
    pub fn from_weighted(dim: usize, atoms: impl IntoIterator<Item = (ExactPoint, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<ExactPoint, Rational> = BTreeMap::new();
        for (p, w) in atoms {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
            if !w.is_positive() {
                return Err(Error::Precondition("atom weights must be positive".into()));
            }
            *merged.entry(p).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = merged.values().sum();
        if !total.is_one() {
            return Err(Error::Precondition(format!("weights sum to {}, not 1", fmt_rational(&total))));
        }
        Ok(Self { dim, atoms: merged.into_iter().collect() })
    }

    /// Uniform measure on a non-empty list of points (with multiplicity).
    pub fn uniform(dim: usize, points: &[ExactPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("no points".into()));
        }
        let w = Rational::new(BigInt::one(), BigInt::from(points.len()));
        Self::from_weighted(dim, points.iter().map(|p| (p.clone(), w.clone())))
    }

    /// `(1/n) sum_{i<n} delta_{T^i x}`.
    pub fn from_orbit(a: &ToralAutomorphism, x: &ExactPoint, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("orbit length must be positive".into()));
        }
        Self::uniform(a.dim(), &crate::torus::orbit_exact(a, x, n))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `"torus-d"`.
    pub fn space(&self) -> String {
        format!("torus-{}", self.dim)
    }

    pub fn atoms(&self) -> &[(ExactPoint, Rational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> Rational {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(&ExactPoint) -> bool) -> Rational {
        self.atoms.iter().filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    }

    /// `A_* mu`.
    pub fn pushforward(&self, a: &ToralAutomorphism) -> Self {
        let atoms = self.atoms.iter().map(|(p, w)| (p.apply(a.matrix()), w.clone()));
        Self::from_weighted(self.dim, atoms).expect("pushforward keeps the weights")
    }

    /// Fixed-point atoms: each coordinate as `floor(x 2^64)`, with `f64` weights.
    pub(crate) fn fixed_point_atoms(&self) -> Vec<(Vec<u64>, f64)> {
        self.atoms.iter().map(|(p, w)| (fixed_point(p), to_f64(w))).collect()
    }
}

/// `floor(x_j 2^64)` for each coordinate of a point in `[0, 1)^d`.
pub(crate) fn fixed_point(p: &ExactPoint) -> Vec<u64> {
    let den = p.denominator();
    p.numerators()
        .iter()
        .map(|n| ((n << 64u32) / den).to_u64().expect("coordinate lies in [0, 1)"))
        .collect()
}

impl Serialize for EmpiricalMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Atom {
            point: String,
            weight: String,
        }
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|(p, w)| Atom {
                point: p.coords().iter().map(fmt_rational).collect::<Vec<_>>().join(","),
                weight: fmt_rational(w),
            })
            .collect();
        let mut st = s.serialize_struct("EmpiricalMeasure", 2)?;
        st.serialize_field("space", &self.space())?;
        st.serialize_field("atoms", &atoms)?;
        st.end()
    }
}

/// `(1/k) sum_{j<k} A^j_* mu`.
pub fn average_pushforwards(a: &ToralAutomorphism, mu: &EmpiricalMeasure, k: usize) -> Result<EmpiricalMeasure> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    if mu.dim() != a.dim() {
        return Err(Error::SpaceMismatch(format!("{} vs torus-{}", mu.space(), a.dim())));
    }
    let scale = Rational::new(BigInt::one(), BigInt::from(k));
    let mut atoms = Vec::with_capacity(mu.len() * k);
    for (p, w) in mu.atoms() {
        let w = w * &scale;
        let mut cur = p.clone();
        for _ in 0..k {
            let next = cur.apply(a.matrix());
            atoms.push((std::mem::replace(&mut cur, next), w.clone()));
        }
    }
    EmpiricalMeasure::from_weighted(mu.dim(), atoms)
}

/// `sum_{i<n} f(T^i x)` over one period; `NonPeriodic` unless `T^n x = x`.
pub fn birkhoff_periodic_sum(
    f: &dyn Fn(&[f64]) -> f64,
    a: &ToralAutomorphism,
    x: &ExactPoint,
    n: u64,
) -> Result<f64> {
    if x.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: x.dim() });
    }
    if n == 0 || a.power_apply_exact(x, n as i64) != *x {
        return Err(Error::NonPeriodic(n));
    }
    let mut sum = 0.0;
    let mut cur = x.clone();
    for _ in 0..n {
        sum += f(&cur.to_f64());
        cur = cur.apply(a.matrix());
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::parse("2,1;1,1").unwrap()
    }

    #[test]
    fn orbit_measures() {
        let fixed = EmpiricalMeasure::from_orbit(&cat(), &ExactPoint::zero(2), 10).unwrap();
        assert_eq!(fixed.len(), 1);
        assert_eq!(fixed.atoms()[0].1, rat(1, 1));
        // (1/11, 3/11)... period 5 under the cat map.
        let x = ExactPoint::new(&[rat(1, 11), rat(3, 11)]);
        assert_eq!(crate::torus::exact_period(&cat(), &x, 100), Some(5));
        let mu = EmpiricalMeasure::from_orbit(&cat(), &x, 5).unwrap();
        assert_eq!(mu.len(), 5);
        assert!(mu.atoms().iter().all(|(_, w)| *w == rat(1, 5)));
        assert_eq!(mu.total_weight(), rat(1, 1));
        assert_eq!(mu.pushforward(&cat()), mu);
    }

    #[test]
    fn pushforward_averages() {
        let x = ExactPoint::new(&[rat(1, 3), rat(0, 1)]);
        let delta = EmpiricalMeasure::uniform(2, std::slice::from_ref(&x)).unwrap();
        assert_eq!(average_pushforwards(&cat(), &delta, 1).unwrap(), delta);
        let two = average_pushforwards(&cat(), &delta, 2).unwrap();
        assert_eq!(two.len(), 2);
        assert!(two.atoms().iter().all(|(_, w)| *w == rat(1, 2)));
        let orbit = EmpiricalMeasure::from_orbit(&cat(), &ExactPoint::new(&[rat(1, 11), rat(3, 11)]), 5).unwrap();
        assert_eq!(average_pushforwards(&cat(), &orbit, 3).unwrap(), orbit);
    }

    #[test]
    fn periodic_sums() {
        let a = cat();
        let x = ExactPoint::new(&[rat(1, 11), rat(3, 11)]);
        let one = birkhoff_periodic_sum(&|_| 1.0, &a, &x, 5).unwrap();
        assert_eq!(one, 5.0);
        let p = |v: &[f64]| (2.0 * std::f64::consts::PI * v[0]).sin() + v[1] * v[1];
        let cob = |v: &[f64]| {
            let image = [(2.0 * v[0] + v[1]).fract(), (v[0] + v[1]).fract()];
            p(&image) - p(v)
        };
        assert!(birkhoff_periodic_sum(&cob, &a, &x, 5).unwrap().abs() < 1e-12);
        let c = birkhoff_periodic_sum(&|v| (2.0 * std::f64::consts::PI * v[0]).cos(), &a, &ExactPoint::zero(2), 1).unwrap();
        assert_eq!(c, 1.0);
        assert!(matches!(birkhoff_periodic_sum(&|_| 1.0, &a, &x, 4), Err(Error::NonPeriodic(4))));
    }
}
