use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ExactPoint, Subtorus, TorusPoint};
use crate::error::{Error, Result};
use crate::exact::{smith::smith_int, IntMatrix, RatMatrix, Rational};
use crate::spectral::Splitting;

/// Default relative shrink of the spectral gap used for cached splittings.
pub const DEFAULT_SPLITTING_TOL: f64 = 1e-9;

/// Automorphism of `T^d` given by an integer matrix with `|det| = 1`.
#[derive(Debug)]
pub struct ToralAutomorphism {
    matrix: IntMatrix,
    inverse: IntMatrix,
    splitting: OnceLock<Option<Splitting>>,
}

impl Clone for ToralAutomorphism {
    fn clone(&self) -> Self {
        let s = OnceLock::new();
        if let Some(v) = self.splitting.get() {
            let _ = s.set(v.clone());
        }
        Self { matrix: self.matrix.clone(), inverse: self.inverse.clone(), splitting: s }
    }
}

impl ToralAutomorphism {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        let det = matrix.det()?;
        if !det.abs().is_one() {
            return Err(Error::NotAutomorphism(det.to_string()));
        }
        let (r, p) = matrix.inverse_scaled()?;
        let inverse = if p.is_one() { r } else { r.neg() };
        Ok(Self { matrix, inverse, splitting: OnceLock::new() })
    }

    /// From a rational matrix; fails with `NotIntegral` on fractional entries.
    pub fn from_rat(m: &RatMatrix) -> Result<Self> {
        Self::new(m.to_int()?)
    }

    /// Parses the matrix text format.
    pub fn parse(s: &str) -> Result<Self> {
        Self::from_rat(&RatMatrix::parse(s)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &IntMatrix {
        &self.inverse
    }

    /// Splitting of the matrix, computed once.
    pub fn splitting(&self) -> Result<&Splitting> {
        self.splitting
            .get_or_init(|| Splitting::new(&self.matrix.to_rat(), DEFAULT_SPLITTING_TOL).ok())
            .as_ref()
            .ok_or(Error::NotSemisimple)
    }

    pub fn apply(&self, x: &TorusPoint) -> TorusPoint {
        x.apply(&self.matrix)
    }

    /// `A^k x` for any integer `k`.
    pub fn power_apply(&self, x: &TorusPoint, k: i64) -> TorusPoint {
        let base = if k >= 0 { &self.matrix } else { &self.inverse };
        x.apply(&base.pow(k.unsigned_abs()))
    }

    /// `A^k x` for exact points.
    pub fn power_apply_exact(&self, x: &ExactPoint, k: i64) -> ExactPoint {
        let base = if k >= 0 { &self.matrix } else { &self.inverse };
        x.apply_unimodular(&base.pow(k.unsigned_abs()))
    }

    /// `|det(A^n - I)|`.
    pub fn periodic_count(&self, n: u64) -> Result<BigInt> {
        let m = self.matrix.pow(n).sub(&IntMatrix::identity(self.dim()));
        Ok(m.det()?.abs())
    }
}

/// `[x, Ax, ..., A^{n-1} x]`.
pub fn orbit(a: &ToralAutomorphism, x: &TorusPoint, n: usize) -> Result<Vec<TorusPoint>> {
    x.check_dim(a.dim())?;
    if n == 0 {
        return Err(Error::Precondition("orbit length must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        let next = a.apply(&cur);
        out.push(cur);
        cur = next;
    }
    Ok(out)
}

/// Exact orbit `[x, ..., A^{n-1} x]`.
pub fn orbit_exact(a: &ToralAutomorphism, x: &ExactPoint, n: usize) -> Vec<ExactPoint> {
    let mut out = Vec::with_capacity(n);
    let mut cur = x.clone();
    for _ in 0..n {
        let next = cur.apply_unimodular(a.matrix());
        out.push(cur);
        cur = next;
    }
    out
}

/// All solutions of `A^n x = x`.
///
/// With `U (A^n - I) V = D` in Smith form, `(A^n - I)^{-1} Z^d = V D^{-1} Z^d`,
/// so the points are `V D^{-1} k mod 1` for `0 <= k_i < d_i`.
pub fn periodic_points(a: &ToralAutomorphism, n: u64) -> Result<Vec<ExactPoint>> {
    let d = a.dim();
    let m = a.matrix().pow(n).sub(&IntMatrix::identity(d));
    if m.det()?.is_zero() {
        return Err(Error::InfinitePeriodicSet { n });
    }
    let s = smith_int(&m);
    let factors = s.invariant_factors();
    let total: BigInt = factors.iter().product();
    if total > BigInt::from(50_000_000u64) {
        return Err(Error::Budget(format!("{total} periodic points")));
    }
    let den = factors.iter().fold(BigInt::one(), |acc, f| acc.lcm(f));
    let mut out = Vec::new();
    let mut k = vec![BigInt::zero(); d];
    loop {
        // Column vector D^{-1} k over the common denominator.
        let scaled: Vec<BigInt> = (0..d).map(|i| &k[i] * (&den / &factors[i])).collect();
        out.push(ExactPoint::from_parts(s.v.mul_vec(&scaled), den.clone()));
        let mut i = 0;
        loop {
            if i == d {
                out.sort();
                return Ok(out);
            }
            k[i] += 1;
            if k[i] < factors[i] {
                break;
            }
            k[i] = BigInt::zero();
            i += 1;
        }
    }
}

/// Least `p >= 1` with `A^p x = x`, searched up to `limit`.
pub fn exact_period(a: &ToralAutomorphism, x: &ExactPoint, limit: u64) -> Option<u64> {
    let mut cur = x.apply_unimodular(a.matrix());
    for p in 1..=limit {
        if &cur == x {
            return Some(p);
        }
        cur = cur.apply_unimodular(a.matrix());
    }
    None
}

/// Integer matrix of `A` restricted to `Y`.
pub fn restrict_to_subtorus(a: &ToralAutomorphism, y: &Subtorus) -> Result<IntMatrix> {
    y.restriction(a.matrix())
}

/// Moves `x` inside its coset `x + Y` to a point of period `n`.
///
/// Writes `x - A^n x = B c_Y + (integer vector)` and solves
/// `(M^n - I) c = c_Y` for the restriction `M`; then `x + B c` is fixed by
/// `A^n`.
pub fn solve_periodic_in_coset(
    a: &ToralAutomorphism,
    y: &Subtorus,
    x: &ExactPoint,
    n: u64,
) -> Result<ExactPoint> {
    if x.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: x.dim() });
    }
    let m = y.restriction(a.matrix())?;
    let lift = x.lift();
    let image = a.matrix().pow(n).to_rat().mul_vec(&lift);
    let r: Vec<Rational> = lift.iter().zip(&image).map(|(p, q)| p - q).collect();
    let (c_y, rest) = y.split_coordinates(&r);
    if !rest.iter().all(Rational::is_integer) {
        return Err(Error::Coset);
    }
    if y.dim() == 0 {
        return Ok(x.clone());
    }
    let k = y.dim();
    let lhs = m.pow(n).sub(&IntMatrix::identity(k)).to_rat();
    let inv = lhs.inverse().map_err(|_| Error::NonErgodicFiber)?;
    let c = inv.mul_vec(&c_y);
    let shift = y.embed(&c);
    let out: Vec<Rational> = lift.iter().zip(&shift).map(|(p, s)| p + s).collect();
    let out = ExactPoint::new(&out);
    if a.power_apply_exact(&out, n as i64) != out {
        return Err(Error::Verification("coset solution is not periodic".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::parse("2,1;1,1").unwrap()
    }

    #[test]
    fn rejects_non_automorphisms() {
        assert!(matches!(ToralAutomorphism::parse("2,0;0,1"), Err(Error::NotAutomorphism(_))));
        assert!(matches!(ToralAutomorphism::parse("1/2,0;0,2"), Err(Error::NotIntegral)));
    }

    #[test]
    fn periodic_point_counts() {
        let a = cat();
        assert_eq!(periodic_points(&a, 1).unwrap(), vec![ExactPoint::zero(2)]);
        assert_eq!(periodic_points(&a, 2).unwrap().len(), 5);
        for p in periodic_points(&a, 3).unwrap() {
            assert_eq!(a.power_apply_exact(&p, 3), p);
        }
    }

    #[test]
    fn unipotent_has_infinitely_many() {
        let u = ToralAutomorphism::parse("1,1;0,1").unwrap();
        assert!(matches!(periodic_points(&u, 3), Err(Error::InfinitePeriodicSet { n: 3 })));
    }

    #[test]
    fn coset_solution_example() {
        let a = ToralAutomorphism::parse("1,0,0;1,2,1;0,1,1").unwrap();
        let y = Subtorus::parse("0,0;1,0;0,1").unwrap();
        let x = ExactPoint::new(&[rat(1, 2), rat(0, 1), rat(0, 1)]);
        let out = solve_periodic_in_coset(&a, &y, &x, 1).unwrap();
        assert_eq!(out, ExactPoint::new(&[rat(1, 2), rat(0, 1), rat(1, 2)]));
        let fixed = ExactPoint::zero(3);
        assert_eq!(solve_periodic_in_coset(&a, &y, &fixed, 3).unwrap(), fixed);
        let cat = cat();
        let x = ExactPoint::new(&[rat(1, 5), rat(0, 1)]);
        assert!(matches!(
            solve_periodic_in_coset(&cat, &Subtorus::trivial(2), &x, 1),
            Err(Error::Coset)
        ));
    }

    #[test]
    fn exact_orbit_keeps_denominators() {
        let x = TorusPoint::from_ratios(&[(1, 3), (1, 3)]);
        for p in orbit(&cat(), &x, 10).unwrap() {
            assert!((p.as_exact().unwrap().denominator() % BigInt::from(3)).is_zero());
        }
        assert_eq!(exact_period(&cat(), &x.to_exact(), 100), Some(4));
    }
}
