use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::approximants::{reduce_period, unipotent_power, Approximator};
use super::descriptor::SupportDescriptor;
use super::symbolic::{Param, SymbolicPoint};
use crate::error::{Error, Result};
use crate::exact::{from_f64, jordan_unipotent, IntMatrix, Rational};
use crate::torus::{ExactPoint, ToralAutomorphism, TorusPoint};

/// Extra bits of the generic point beyond the orbit growth.
const GUARD_BITS: u64 = 128;

/// Search controls for [`interval_permutation_with`].
#[derive(Clone, Debug)]
pub struct IntervalOptions {
    /// First approximant index; doubled every round.
    pub n_start: BigInt,
    /// Lower bound for the period `q`; doubled every round.
    pub q_min: u64,
    pub q_cap: u64,
    pub max_rounds: usize,
}

impl Default for IntervalOptions {
    fn default() -> Self {
        Self { n_start: BigInt::from(16), q_min: 0, q_cap: 1_000_000, max_rounds: 40 }
    }
}

/// Periodic `z` with a permutation `pi` of `{0, K, 2K, ...} ∩ [0, q)` pairing
/// the `K`-subsampled orbits of `z` and `x`.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalMatch {
    pub z: TorusPoint,
    pub q: u64,
    #[serde(rename = "K")]
    pub k: u64,
    /// `pi[i] = π(iK)`, a multiple of `K`.
    pub pi: Vec<u64>,
    pub good_count: u64,
    pub good_fraction: f64,
    /// Boxes visited by either orbit.
    pub boxes: usize,
    /// Cells per dimension of the box grid.
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub grid: BigInt,
    /// Approximant index of `z`.
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub n: BigInt,
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub c: BigInt,
    pub rounds: usize,
}

impl IntervalMatch {
    /// Indices `i` with `d(U^{iK} z, U^{π(iK)} x) < eps` exceed
    /// `(1 - eps) q / K`.
    pub fn satisfies(&self, eps: f64) -> bool {
        (self.good_count as f64) * (self.k as f64) > (1.0 - eps) * self.q as f64
    }
}

/// Box partition of `T^d` into `g^d` cubes of side `1/g < eps / sqrt(d)`,
/// with walls at dyadic approximations of the irrational offsets
/// `frac((j + 1) sqrt(2) / 3)`.
struct Boxes {
    g: BigInt,
    shifts: Vec<Rational>,
}

impl Boxes {
    fn new(d: usize, eps: &Rational) -> Self {
        let root_d = Param::quadratic(BigInt::zero(), BigInt::one(), BigInt::from(d), BigInt::one());
        // g = floor(sqrt(d) / eps) + 1
        let g: BigInt = root_d.floor_affine(&(Rational::one() / eps), &Rational::zero()) + 1;
        let bits = g.bits() + 64;
        let shifts = (0..d)
            .map(|j| {
                let s = Param::quadratic(BigInt::zero(), BigInt::from(j + 1), BigInt::from(2), BigInt::from(3));
                let v = s.approx(bits);
                &v - v.floor()
            })
            .collect();
        Self { g, shifts }
    }

    fn index(&self, p: &ExactPoint) -> Vec<BigInt> {
        let g = Rational::from_integer(self.g.clone());
        p.coords()
            .iter()
            .zip(&self.shifts)
            .map(|(c, s)| ((c - s) * &g).floor().to_integer().mod_floor(&self.g))
            .collect()
    }
}

/// `K`-subsampled orbit `U^{iK} p`, `0 <= i < count`.
fn subsampled_orbit(step: &IntMatrix, p: &ExactPoint, count: usize) -> Vec<ExactPoint> {
    let mut out = Vec::with_capacity(count);
    let mut cur = p.clone();
    for _ in 0..count {
        let next = cur.apply(step);
        out.push(std::mem::replace(&mut cur, next));
    }
    out
}

fn sup_distance(a: &ExactPoint, b: &ExactPoint) -> Rational {
    a.centered_diff(b).into_iter().map(|c| c.abs()).fold(Rational::zero(), |m, c| m.max(c))
}

/// Matching for a generic point `x` of the measure `mu`:
/// returns `z` of period `q > K` and the permutation `pi`.
pub fn interval_permutation(
    u: &ToralAutomorphism,
    mu: &SupportDescriptor,
    x: &SymbolicPoint,
    k: u64,
    eps: f64,
) -> Result<IntervalMatch> {
    if x.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: x.dim() });
    }
    interval_permutation_with(u.matrix(), mu, &|bits| x.approx(bits), k, eps, &IntervalOptions::default(), &|_| true)
}

/// [`interval_permutation`] for a point given by dyadic approximations
/// `approx(bits)` within `2^{-bits}`, with periods restricted to `q_ok`.
pub fn interval_permutation_with(
    u: &IntMatrix,
    mu: &SupportDescriptor,
    approx: &dyn Fn(u64) -> ExactPoint,
    k: u64,
    eps: f64,
    opts: &IntervalOptions,
    q_ok: &dyn Fn(u64) -> bool,
) -> Result<IntervalMatch> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    if k == 0 {
        return Err(Error::Precondition("K must be positive".into()));
    }
    if k.gcd(&mu.m) != 1 {
        return Err(Error::Coprimality { k, m: mu.m });
    }
    jordan_unipotent(&u.to_rat())?;
    mu.check_consistency(u)?;
    let d = u.rows();
    let eps_r = from_f64(eps)?;
    let boxes = Boxes::new(d, &eps_r);
    let step = unipotent_power(u, &BigInt::from(k))?;
    let approximator = Approximator::new(u, &mu.closure)?;
    let c = approximator.c().clone();
    let fixed = mu.is_finite() && mu.a.is_exact();

    let mut n = opts.n_start.clone().max(BigInt::one());
    let mut q_min = opts.q_min.max(k + 1);
    let mut last = String::from("no round completed");
    for round in 0..opts.max_rounds {
        let z = match (fixed, mu.a.as_exact()) {
            (true, Some(a)) => a,
            _ => approximator.point(&n),
        };
        let period = reduce_period(u, &z, &approximator.period(&n))?;
        let t = period
            .to_u64()
            .filter(|&t| t <= opts.q_cap)
            .ok_or_else(|| Error::Budget(format!("period of z exceeds the cap {}; last round: {last}", opts.q_cap)))?;
        let q = (q_min.div_ceil(t)..=opts.q_cap / t)
            .map(|j| j * t)
            .find(|&q| q > k && q_ok(q))
            .ok_or_else(|| Error::Budget(format!("no admissible period in [{q_min}, {}]; last round: {last}", opts.q_cap)))?;
        let count = q.div_ceil(k) as usize;

        let growth = unipotent_power(u, &BigInt::from(q + k))?.inf_norm().bits();
        let x0 = approx(GUARD_BITS + growth + boxes.g.bits());
        if x0.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x0.dim() });
        }
        let zs = subsampled_orbit(&step, &z, count);
        let xs = subsampled_orbit(&step, &x0, count);

        let mut cells: BTreeMap<Vec<BigInt>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (i, p) in zs.iter().enumerate() {
            cells.entry(boxes.index(p)).or_default().0.push(i);
        }
        for (i, p) in xs.iter().enumerate() {
            cells.entry(boxes.index(p)).or_default().1.push(i);
        }
        let r = cells.len();
        let limit = eps * count as f64 / (2.0 * r as f64);
        let worst = cells.values().map(|(a, b)| a.len().abs_diff(b.len())).max().unwrap_or(0);
        if (worst as f64) < limit {
            let pi = match_boxes(&cells, count);
            // Approximation error of x is below 2^{-GUARD_BITS} / g after growth.
            let margin = Rational::new(BigInt::one(), &boxes.g << (GUARD_BITS - 8));
            let good = (0..count).filter(|&i| sup_distance(&zs[i], &xs[pi[i]]) + &margin < eps_r).count() as u64;
            let m = IntervalMatch {
                z: TorusPoint::Exact(z),
                q,
                k,
                pi: pi.iter().map(|&j| j as u64 * k).collect(),
                good_count: good,
                good_fraction: good as f64 / count as f64,
                boxes: r,
                grid: boxes.g.clone(),
                n: n.clone(),
                c: c.clone(),
                rounds: round + 1,
            };
            if m.satisfies(eps) {
                return Ok(m);
            }
            last = format!("q = {q}: {good} good of {count}");
        } else {
            last = format!("q = {q}, n = {n}: box count gap {worst} >= {limit:.3} over {r} boxes");
        }
        n *= 2;
        q_min = q_min.max(q).saturating_mul(2);
        if q_min > opts.q_cap {
            break;
        }
    }
    Err(Error::Budget(format!("interval permutation did not converge; last round: {last}")))
}

/// Pairs same-box visits in index order, then the leftovers in index order.
/// `pi[i]` is the `x` index matched with `z` index `i`.
fn match_boxes(cells: &BTreeMap<Vec<BigInt>, (Vec<usize>, Vec<usize>)>, count: usize) -> Vec<usize> {
    let mut pi = vec![usize::MAX; count];
    let mut free_z = Vec::new();
    let mut free_x = Vec::new();
    for (zs, xs) in cells.values() {
        let common = zs.len().min(xs.len());
        for t in 0..common {
            pi[zs[t]] = xs[t];
        }
        free_z.extend_from_slice(&zs[common..]);
        free_x.extend_from_slice(&xs[common..]);
    }
    free_z.sort_unstable();
    free_x.sort_unstable();
    for (i, j) in free_z.into_iter().zip(free_x) {
        pi[i] = j;
    }
    debug_assert!(pi.iter().all(|&j| j < count));
    pi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jordan2() -> ToralAutomorphism {
        ToralAutomorphism::parse("1,1;0,1").unwrap()
    }

    fn is_permutation(m: &IntervalMatch) -> bool {
        let mut v = m.pi.clone();
        v.sort_unstable();
        v == (0..m.q.div_ceil(m.k)).map(|i| i * m.k).collect::<Vec<_>>()
    }

    #[test]
    fn fiber_measure_k7() {
        let mu = SupportDescriptor::parse("a = 0, phi; H = 1;0; m = 1").unwrap();
        let x = SymbolicPoint::parse("sqrt(3)-1, phi").unwrap();
        let m = interval_permutation(&jordan2(), &mu, &x, 7, 0.2).unwrap();
        assert!(m.satisfies(0.2));
        assert!(m.q > 7 && is_permutation(&m));
        assert!(jordan2().power_apply_exact(&m.z.to_exact(), m.q as i64) == m.z.to_exact());
    }

    #[test]
    fn periodic_point_matches_itself() {
        let mu = SupportDescriptor::parse("a = 0, 1/5; H = trivial; m = 5").unwrap();
        let x = SymbolicPoint::parse("0, 1/5").unwrap();
        let m = interval_permutation(&jordan2(), &mu, &x, 1, 0.1).unwrap();
        assert_eq!(m.good_fraction, 1.0);
        assert!(m.pi.iter().enumerate().all(|(i, &p)| p == i as u64));
    }

    #[test]
    fn coprimality_required() {
        let mu = SupportDescriptor::parse("a = 0, 1/2; H = trivial; m = 2").unwrap();
        let x = SymbolicPoint::parse("0, 1/2").unwrap();
        assert!(matches!(
            interval_permutation(&jordan2(), &mu, &x, 4, 0.2),
            Err(Error::Coprimality { k: 4, m: 2 })
        ));
    }
}
