use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::descriptor::{ClosureData, SupportDescriptor};
use crate::error::{Error, Result};
use crate::exact::{jordan_unipotent, lcm_denominators, to_f64, IntMatrix, Rational};
use crate::torus::{exact_period, sup_circle, ExactPoint, ToralAutomorphism};

/// Limit for the exact period search of a rational base point.
const PERIOD_SEARCH_LIMIT: u64 = 1_000_000;

/// `U^p = sum_{k < d} C(p, k) (U - I)^k` for unipotent `U`, valid for any
/// non-negative `p`.
pub fn unipotent_power(u: &IntMatrix, p: &BigInt) -> Result<IntMatrix> {
    let d = u.rows();
    let n = u.sub(&IntMatrix::identity(d));
    let mut term = IntMatrix::identity(d);
    let mut out = IntMatrix::zeros(d, d);
    let mut binom = BigInt::one();
    for k in 0..=d {
        if term.entries().iter().all(Zero::is_zero) {
            return Ok(out);
        }
        if k == d {
            break;
        }
        out = out.add(&scale(&term, &binom));
        binom = binom * (p - BigInt::from(k)) / BigInt::from(k + 1);
        term = term.mul(&n);
    }
    Err(Error::NotUnipotent)
}

fn scale(m: &IntMatrix, k: &BigInt) -> IntMatrix {
    let data = m.entries().iter().map(|e| e * k).collect();
    IntMatrix::new(m.rows(), m.cols(), data).expect("same shape")
}

/// `U^p x = x`, exactly.
pub fn is_periodic_with(u: &IntMatrix, x: &ExactPoint, p: &BigInt) -> Result<bool> {
    Ok(&x.apply(&unipotent_power(u, p)?) == x)
}

/// Smallest divisor `t` of the period `p` with `U^t x = x`, found by
/// removing prime factors one at a time. Factors above `10^6` left after
/// trial division are treated as prime.
pub fn reduce_period(u: &IntMatrix, x: &ExactPoint, p: &BigInt) -> Result<BigInt> {
    let mut t = p.clone();
    for f in trial_factors(p) {
        while t.is_multiple_of(&f) {
            let cand = &t / &f;
            if is_periodic_with(u, x, &cand)? {
                t = cand;
            } else {
                break;
            }
        }
    }
    Ok(t)
}

fn trial_factors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.clone();
    let mut out = Vec::new();
    let mut f = BigInt::from(2);
    while &f * &f <= n && f < BigInt::from(1_000_000) {
        if n.is_multiple_of(&f) {
            out.push(f.clone());
            while n.is_multiple_of(&f) {
                n /= &f;
            }
        }
        f += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

/// Periodic approximants of a point `v0 + sum t_i v_i`, built in Jordan
/// coordinates `U = Q J Q^{-1}`:
/// `x_n = Q (y0 + sum_i (r_{i,n} / n) w_i)` with `y0 = Q^{-1} v0`,
/// `w_i = s_i Q^{-1} v_i` integral and `r_{i,n} = round(n t_i / s_i)`.
/// Every `x_n` has period `c n` with `c = d! l`, `l` the common denominator
/// of `y0`.
#[derive(Clone, Debug)]
pub struct Approximator {
    u: IntMatrix,
    q: IntMatrix,
    y0: Vec<Rational>,
    ws: Vec<Vec<Rational>>,
    scales: Vec<BigInt>,
    closure: ClosureData,
    c: BigInt,
}

impl Approximator {
    pub fn new(u: &IntMatrix, closure: &ClosureData) -> Result<Self> {
        let d = u.rows();
        if closure.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: closure.dim() });
        }
        let (q, _) = jordan_unipotent(&u.to_rat())?;
        let q_inv = q.inverse()?;
        let y0 = q_inv.mul_vec(&closure.v0);
        let mut ws = Vec::new();
        let mut scales = Vec::new();
        for v in &closure.spans {
            let v: Vec<Rational> = v.iter().map(|c| Rational::from_integer(c.clone())).collect();
            let w = q_inv.mul_vec(&v);
            let s = lcm_denominators(&w);
            let sr = Rational::from_integer(s.clone());
            ws.push(w.iter().map(|c| c * &sr).collect());
            scales.push(s);
        }
        let ell = lcm_denominators(&y0);
        let fact: BigInt = (1..=d as u64).map(BigInt::from).product();
        Ok(Self { u: u.clone(), q: q.to_int()?, y0, ws, scales, closure: closure.clone(), c: fact * ell })
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn jordan_basis(&self) -> &IntMatrix {
        &self.q
    }

    /// `x_n`, a point of period `c n`.
    pub fn point(&self, n: &BigInt) -> ExactPoint {
        assert!(n > &BigInt::zero(), "index must be positive");
        let mut y = self.y0.clone();
        for ((w, s), t) in self.ws.iter().zip(&self.scales).zip(&self.closure.targets) {
            let r = t.round_scaled(&Rational::new(n.clone(), s.clone()));
            let coef = Rational::new(r, n.clone());
            for (yi, wi) in y.iter_mut().zip(w) {
                *yi += &coef * wi;
            }
        }
        ExactPoint::new(&self.q.to_rat().mul_vec(&y))
    }

    pub fn period(&self, n: &BigInt) -> BigInt {
        &self.c * n
    }

    /// Sup-circle distance from `x_n` to a `2^{-80}` approximation of the
    /// target.
    pub fn distance_to_target(&self, x: &ExactPoint) -> f64 {
        let t = ExactPoint::new(&self.closure.target_approx(80));
        sup_circle(&x.centered_diff(&t).iter().map(to_f64).collect::<Vec<_>>())
    }

    /// Upper bound `|Q|_inf sum_i |w_i|_inf / (2 n)` on the distance from `x_n`
    /// to the target.
    pub fn error_bound(&self, n: &BigInt) -> Rational {
        let qn = Rational::from_integer(self.q.inf_norm());
        let wsum: Rational = self
            .ws
            .iter()
            .map(|w| w.iter().map(|c| if c < &Rational::zero() { -c } else { c.clone() }).fold(Rational::zero(), |a, b| a.max(b)))
            .sum();
        qn * wsum / Rational::from_integer(n * 2)
    }

    fn verify(&self, x: &ExactPoint, n: &BigInt) -> Result<()> {
        if !is_periodic_with(&self.u, x, &self.period(n))? {
            return Err(Error::Verification(format!("approximant at n = {n} is not periodic")));
        }
        Ok(())
    }
}

/// One periodic approximant.
#[derive(Clone, Debug, Serialize)]
pub struct Approximant {
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub n: BigInt,
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub point: crate::torus::TorusPoint,
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub period: BigInt,
    pub distance: f64,
}

impl Approximant {
    pub fn exact(&self) -> ExactPoint {
        self.point.to_exact()
    }

    /// The period as `u64`, if it fits.
    pub fn period_u64(&self) -> Option<u64> {
        self.period.to_u64()
    }
}

/// Periodic approximants `x_n`, `n` in `ns`, of the closure target, each
/// verified to satisfy `U^{c n} x_n = x_n` exactly.
pub fn periodic_approximants(u: &ToralAutomorphism, closure: &ClosureData, ns: &[u64]) -> Result<(BigInt, Vec<Approximant>)> {
    let approx = Approximator::new(u.matrix(), closure)?;
    let mut out = Vec::new();
    for &n in ns {
        if n == 0 {
            return Err(Error::Precondition("approximant index must be positive".into()));
        }
        let n = BigInt::from(n);
        let x = approx.point(&n);
        approx.verify(&x, &n)?;
        out.push(Approximant {
            distance: approx.distance_to_target(&x),
            period: approx.period(&n),
            point: crate::torus::TorusPoint::Exact(x),
            n,
        });
    }
    Ok((approx.c().clone(), out))
}

/// Periodic points `x_n` of period `c n` whose orbit measures approximate
/// the measure described by `mu`.
#[derive(Clone, Debug, Serialize)]
pub struct StrongDpm {
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub c: BigInt,
    /// True when the support is a finite orbit of a rational point.
    pub finite: bool,
    pub points: Vec<Approximant>,
}

/// Finite support with rational `a` returns `a` itself with `c` its exact
/// period; otherwise the approximants of `a` from the closure data.
pub fn strong_dpm_sequence(u: &ToralAutomorphism, mu: &SupportDescriptor, ns: &[u64]) -> Result<StrongDpm> {
    jordan_unipotent(&u.matrix().to_rat())?;
    mu.check_consistency(u.matrix())?;
    if let (true, Some(a)) = (mu.is_finite(), mu.a.as_exact()) {
        let c = exact_period(u, &a, PERIOD_SEARCH_LIMIT)
            .ok_or_else(|| Error::Budget(format!("period of a exceeds {PERIOD_SEARCH_LIMIT}")))?;
        let points = ns
            .iter()
            .map(|&n| Approximant {
                n: BigInt::from(n),
                point: crate::torus::TorusPoint::Exact(a.clone()),
                period: BigInt::from(c) * n,
                distance: 0.0,
            })
            .collect();
        return Ok(StrongDpm { c: BigInt::from(c), finite: true, points });
    }
    let (c, points) = periodic_approximants(u, &mu.closure, ns)?;
    Ok(StrongDpm { c, finite: false, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::unipotent::{Param, SymbolicPoint};

    fn jordan2() -> ToralAutomorphism {
        ToralAutomorphism::parse("1,1;0,1").unwrap()
    }

    #[test]
    fn power_by_binomials() {
        let u = IntMatrix::from_i64_rows(&[vec![1, 2, 3], vec![0, 1, 4], vec![0, 0, 1]]);
        for p in 0..12u64 {
            assert_eq!(unipotent_power(&u, &BigInt::from(p)).unwrap(), u.pow(p));
        }
        let cat = IntMatrix::from_i64_rows(&[vec![2, 1], vec![1, 1]]);
        assert!(unipotent_power(&cat, &BigInt::from(3)).is_err());
    }

    #[test]
    fn half_shift_example() {
        // x_n = (1/2, round(n / sqrt 2) / n), period 4n.
        let closure = ClosureData::new(
            vec![rat(1, 2), rat(0, 1)],
            vec![vec![BigInt::zero(), BigInt::one()]],
            vec![Param::parse("sqrt(2)/2").unwrap()],
        )
        .unwrap();
        let ns: Vec<u64> = (1..=60).collect();
        let (c, pts) = periodic_approximants(&jordan2(), &closure, &ns).unwrap();
        assert_eq!(c, BigInt::from(4));
        for p in &pts {
            let n: i64 = p.n.to_i64().unwrap();
            // round(n / sqrt 2) = floor(sqrt(n^2 / 2) + 1/2) = floor((sqrt(2 n^2) + 1) / 2)
            let r = ((BigInt::from(2 * n * n)).sqrt() + 1) / 2;
            let want = ExactPoint::new(&[rat(1, 2), Rational::new(r, BigInt::from(n))]);
            assert_eq!(p.exact(), want);
            assert_eq!(p.period, BigInt::from(4 * n));
            assert!(p.distance <= 0.5 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn rational_target_is_hit() {
        let closure = ClosureData::new(vec![rat(0, 1), rat(0, 1)], vec![vec![BigInt::zero(), BigInt::one()]], vec![Param::Rational(rat(2, 7))])
            .unwrap();
        let (_, pts) = periodic_approximants(&jordan2(), &closure, &[7]).unwrap();
        assert_eq!(pts[0].exact(), ExactPoint::new(&[rat(0, 1), rat(2, 7)]));
        assert_eq!(pts[0].distance, 0.0);
    }

    #[test]
    fn fifth_is_period_five() {
        let x = ExactPoint::new(&[rat(0, 1), rat(1, 5)]);
        assert_eq!(exact_period(&jordan2(), &x, 100), Some(5));
        assert_eq!(reduce_period(jordan2().matrix(), &x, &BigInt::from(40)).unwrap(), BigInt::from(5));
    }

    #[test]
    fn non_jordan_unipotent() {
        let u = ToralAutomorphism::parse("1,0;3,1").unwrap();
        let a = SymbolicPoint::parse("phi,0").unwrap();
        let closure = ClosureData::coordinatewise(&a);
        let (c, pts) = periodic_approximants(&u, &closure, &[10, 100, 1000]).unwrap();
        assert!(c >= BigInt::from(2));
        assert!(pts.windows(2).all(|w| w[1].distance <= w[0].distance + 1e-12));
        assert!(pts[2].distance < 0.01);
    }

    #[test]
    fn finite_support_returns_base_point() {
        let mu = SupportDescriptor::parse("a = 0, 1/2; H = trivial; m = 2").unwrap();
        let s = strong_dpm_sequence(&jordan2(), &mu, &[1, 2, 3]).unwrap();
        assert!(s.finite);
        assert_eq!(s.c, BigInt::from(2));
        assert!(s.points.iter().all(|p| p.exact() == ExactPoint::new(&[rat(0, 1), rat(1, 2)])));
    }

    #[test]
    fn fiber_sequence_constant() {
        let mu = SupportDescriptor::parse("a = 0, phi; H = 1;0; m = 1").unwrap();
        let s = strong_dpm_sequence(&jordan2(), &mu, &[25, 50]).unwrap();
        assert_eq!(s.c, BigInt::from(2));
        assert!(!s.finite);
    }
}
