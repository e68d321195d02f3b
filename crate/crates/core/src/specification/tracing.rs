use nalgebra::DMatrix;
use num_bigint::BigInt;

use super::closing::{ClosingResult, Closer};
use super::{check_partial_trace, Metric, Specification};
use crate::error::{Error, Result};
use crate::exact::{to_f64, IntMatrix, Rational};
use crate::lattice::minimize_in_ellipsoid;
use crate::spectral::{PeriodSet, Regime, Splitting};
use crate::torus::{ExactPoint, ToralAutomorphism, TorusPoint};

/// Largest spacing examined by [`spacing_constant`].
const MAX_CALIBRATED_SPACING: u64 = 400;
/// Extra bits of precision kept beyond the orbit growth.
const GUARD_BITS: f64 = 64.0;

/// `max_b s_b |c_b(g)|`, scaled by `kappa`: the adapted norms of the stable
/// part and of `A^{-m}` applied to the unstable part.
struct DensityCost<'a> {
    split: &'a Splitting,
    scale: Vec<f64>,
    form: DMatrix<f64>,
}

impl<'a> DensityCost<'a> {
    fn new(split: &'a Splitting, m: u64) -> Self {
        let scale: Vec<f64> = split
            .blocks()
            .iter()
            .map(|b| if b.regime == Regime::Unstable { b.modulus.powf(-(m as f64)) } else { 1.0 })
            .collect();
        let mut form = split.basis_inverse() * split.kappa();
        for (b, s) in split.blocks().iter().zip(&scale) {
            for k in 0..b.size {
                let mut row = form.row_mut(b.start + k);
                row *= *s;
            }
        }
        Self { split, scale, form }
    }

    fn cost(&self, g: &[f64]) -> f64 {
        let c = self.split.coordinates(g);
        let norms = self.split.block_norms(&c);
        self.split.kappa() * norms.iter().zip(&self.scale).map(|(n, s)| n * s).fold(0.0, f64::max)
    }

    /// Integer `w` minimizing `cost(g - w)` among those with cost below
    /// `bound`, if any.
    fn best_below(&self, g: &[f64], bound: f64) -> Result<Option<(Vec<i64>, f64)>> {
        let radius = bound * (self.split.blocks().len() as f64).sqrt();
        let best = minimize_in_ellipsoid(&self.form, g, radius, 2_000_000, |w| {
            let v: Vec<f64> = g.iter().zip(w).map(|(g, w)| g - *w as f64).collect();
            self.cost(&v)
        })?;
        Ok(best.filter(|(_, c)| *c < bound))
    }
}

fn require_hyperbolic(a: &ToralAutomorphism) -> Result<&Splitting> {
    let s = a.splitting()?;
    if !s.is_hyperbolic() {
        return Err(Error::NotHyperbolic);
    }
    Ok(s)
}

/// Tracing tolerance `delta = (1 - rho^{-1}) eps` of a single inductive step.
fn step_tolerance(split: &Splitting, eps: f64) -> f64 {
    (1.0 - 1.0 / split.rho()) * eps
}

/// Empirical spacing constant `M(eps)`: twice the least `m` for which every
/// point of a grid in `[-1/2, 1/2)^d` is within the step tolerance of the
/// lattice in the cost `max(|g_s|, |A^{-m} g_u|)`.
pub fn spacing_constant(a: &ToralAutomorphism, eps: f64) -> Result<u64> {
    let split = require_hyperbolic(a)?;
    let delta = step_tolerance(split, eps);
    let d = a.dim();
    let per_dim: usize = match d {
        1 | 2 => 12,
        3 => 6,
        _ => 4,
    };
    let total = per_dim.pow(d as u32);
    let grid: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let i = idx % per_dim;
                    idx /= per_dim;
                    (i as f64 + 0.5) / per_dim as f64 - 0.5
                })
                .collect()
        })
        .collect();
    for m in 0..=MAX_CALIBRATED_SPACING {
        let cost = DensityCost::new(split, m);
        let mut all = true;
        for g in &grid {
            if cost.best_below(g, delta)?.is_none() {
                all = false;
                break;
            }
        }
        if all {
            return Ok((2 * m).max(1));
        }
    }
    Err(Error::Budget(format!("no spacing up to {MAX_CALIBRATED_SPACING} works for eps = {eps}")))
}

/// Rational approximation `S^2 (S^2 + I)^{-1}` of the unstable projection,
/// `S = A^N`, as `(numerator, denominator)`.
fn unstable_projection(a: &ToralAutomorphism, power: u64) -> Result<(IntMatrix, BigInt)> {
    let s2 = a.matrix().pow(2 * power);
    let (r, p) = s2.add(&IntMatrix::identity(a.dim())).inverse_scaled()?;
    Ok((s2.mul(&r), p))
}

fn ln_norm(m: &IntMatrix) -> f64 {
    let n = m.inf_norm();
    to_f64(&Rational::from_integer(n)).ln().max(1e-3)
}

/// Inductive tracing of a specification (hyperbolic automorphisms).
///
/// `y_1 = x_1`. Given `y_k`, let `q = A^{b_k} y_k`, `m = a_{k+1} - b_k` and
/// `g = A^{a_{k+1}} x_{k+1} - A^m q`. An integer `w` with
/// `|P_s (g - w)| < delta` and `|A^{-m} P_u (g - w)| < delta` gives the point
/// `A^m q + P_u (g - w)` at time `a_{k+1}`: it is `delta`-close to the new
/// segment going forward and its past differs from that of `y_k` by a
/// backward-contracted unstable vector. The point is computed exactly with a
/// rational approximation of `P_u` and rounded to a dyadic grid fine enough
/// for the whole time range.
pub fn trace_spec(a: &ToralAutomorphism, spec: &Specification, eps: f64) -> Result<TorusPoint> {
    spec.validate()?;
    let first = spec
        .segments
        .first()
        .ok_or_else(|| Error::Precondition("empty specification".into()))?;
    first.point.check_dim(a.dim())?;
    if spec.segments.len() == 1 {
        return Ok(first.point.clone());
    }
    let split = require_hyperbolic(a)?;
    let delta = step_tolerance(split, eps);
    let cap = spacing_constant(a, eps)?;

    let end = spec.end() as f64;
    let ln_growth = ln_norm(a.matrix()).max(ln_norm(a.inverse_matrix()));
    let bits = (end * ln_growth / std::f64::consts::LN_2 + GUARD_BITS).ceil() as u64;
    let ln_rho = split.rho().ln();
    let power = ((end * ln_growth + cap as f64 * ln_rho + GUARD_BITS * std::f64::consts::LN_2) / (2.0 * ln_rho))
        .ceil() as u64
        + 2;
    let (pu_num, pu_den) = unstable_projection(a, power)?;

    let mut y = first.point.to_exact();
    for k in 1..spec.segments.len() {
        let prev = &spec.segments[k - 1];
        let seg = &spec.segments[k];
        seg.point.check_dim(a.dim())?;
        let m = seg.a - prev.b;
        let mq = a.power_apply_exact(&y, seg.a as i64);
        let anchor = a.power_apply_exact(&seg.point.to_exact(), seg.a as i64);
        let g0 = anchor.centered_diff(&mq);
        let g0f: Vec<f64> = g0.iter().map(to_f64).collect();
        let cost = DensityCost::new(split, m.min(cap));
        let (w, _) = cost.best_below(&g0f, delta)?.ok_or_else(|| Error::SpacingTooSmall {
            segment: k,
            cost: cost.cost(&g0f),
            bound: delta,
        })?;
        // p = A^m q + P_u (g0 - w), exactly, then rounded.
        let gw: Vec<Rational> = g0
            .iter()
            .zip(&w)
            .map(|(g, w)| g - Rational::from_integer(BigInt::from(*w)))
            .collect();
        let den = crate::exact::lcm_denominators(&gw);
        let gw_int: Vec<BigInt> = gw.iter().map(|r| (r * Rational::from_integer(den.clone())).to_integer()).collect();
        let shift = pu_num.mul_vec(&gw_int);
        let shift_den = &pu_den * &den;
        let shift: Vec<Rational> = shift.into_iter().map(|s| Rational::new(s, shift_den.clone())).collect();
        let base = mq.lift();
        let p: Vec<Rational> = base.iter().zip(&shift).map(|(b, s)| b + s).collect();
        let p = ExactPoint::new(&p).round_to_bits(bits);
        y = a.power_apply_exact(&p, -(seg.a as i64));
    }
    let y = TorusPoint::Exact(y);
    let report = check_partial_trace(a, spec, &y, eps, Metric::Torus)?;
    if !report.is_full() {
        return Err(Error::Verification(format!(
            "traced point misses in-segment indices (max distance {})",
            report.max_distance
        )));
    }
    Ok(y)
}

/// Periodic tracing: trace at `eps/2`, then close at `eps/2` on
/// `0 <= i <= (1 - eps/2) n`. If that closing fails, the closing is retried
/// on the indices `0..b_r` with the tolerance left over by the measured
/// tracing error; both compositions keep the total below `eps`.
pub fn trace_spec_periodic(
    a: &ToralAutomorphism,
    spec: &Specification,
    n: u64,
    eps: f64,
    periods: Option<&PeriodSet>,
) -> Result<ClosingResult> {
    spec.validate()?;
    if spec.is_empty() {
        return Err(Error::Precondition("empty specification".into()));
    }
    if (n as f64) < (1.0 + eps) * spec.end() as f64 {
        return Err(Error::Precondition(format!(
            "period {n} < (1 + eps) b_r = {}",
            (1.0 + eps) * spec.end() as f64
        )));
    }
    if let Some(p) = periods {
        if !p.contains(n) {
            return Err(Error::Precondition(format!("period {n} is not in the period set")));
        }
    }
    let half = eps / 2.0;
    let x = trace_spec(a, spec, half)?;
    let traced = check_partial_trace(a, spec, &x, half, Metric::Torus)?;
    let result = match Closer::new(a, n, half, Metric::Torus)?.close(&x) {
        Ok(r) => r,
        Err(Error::ClosingFailed { .. }) => {
            let slack = (eps - traced.max_distance) * (1.0 - 1e-9);
            Closer::with_horizon(a, n, slack.min(0.999), spec.end() - 1, Metric::Torus)?.close(&x)?
        }
        Err(e) => return Err(e),
    };
    let report = check_partial_trace(a, spec, &result.point, eps, Metric::Torus)?;
    if !report.ok {
        return Err(Error::Verification("periodic tracer fails the specification".into()));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specification::Segment;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::parse("2,1;1,1").unwrap()
    }

    fn two_segments(m: u64) -> Specification {
        Specification::new(
            vec![
                Segment { point: TorusPoint::parse("0,0").unwrap(), a: 0, b: 5 },
                Segment { point: TorusPoint::parse("1/2,1/2").unwrap(), a: 5 + m, b: 10 + m },
            ],
            m,
        )
        .unwrap()
    }

    #[test]
    fn single_segment_returns_its_point() {
        let x = TorusPoint::parse("0.3,0.1").unwrap();
        let s = Specification::new(vec![Segment { point: x.clone(), a: 2, b: 7 }], 0).unwrap();
        assert_eq!(trace_spec(&cat(), &s, 0.1).unwrap(), x);
    }

    #[test]
    fn two_segments_are_traced() {
        let a = cat();
        let m = spacing_constant(&a, 0.1).unwrap();
        let s = two_segments(m);
        let y = trace_spec(&a, &s, 0.1).unwrap();
        let r = check_partial_trace(&a, &s, &y, 0.1, Metric::Torus).unwrap();
        assert!(r.ok && r.is_full());
    }

    #[test]
    fn zero_spacing_fails() {
        assert!(matches!(
            trace_spec(&cat(), &two_segments(0), 0.1),
            Err(Error::SpacingTooSmall { .. })
        ));
    }

    #[test]
    fn periodic_tracing() {
        let a = cat();
        let m = spacing_constant(&a, 0.05).unwrap();
        let s = two_segments(m);
        let n = ((1.1 * s.end() as f64).ceil() as u64).max(s.end() + 20);
        let r = trace_spec_periodic(&a, &s, n, 0.1, None).unwrap();
        let y = r.point.as_exact().unwrap();
        assert_eq!(&a.power_apply_exact(y, n as i64), y);
        assert!(check_partial_trace(&a, &s, &r.point, 0.1, Metric::Torus).unwrap().ok);
        assert!(matches!(
            trace_spec_periodic(&a, &s, s.end(), 0.1, None),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn fixed_point_segment_closes_to_zero() {
        let s = Specification::new(vec![Segment { point: TorusPoint::zero(2), a: 0, b: 5 }], 0).unwrap();
        let r = trace_spec_periodic(&cat(), &s, 6, 0.1, None).unwrap();
        assert_eq!(r.point, TorusPoint::zero(2));
    }
}
