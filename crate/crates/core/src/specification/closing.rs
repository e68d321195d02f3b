use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use super::Metric;
use crate::error::{Error, Result};
use crate::exact::{to_f64, IntMatrix, Rational};
use crate::lattice::{enumerate_ellipsoid, minimize_in_ellipsoid};
use crate::spectral::{PeriodSet, Regime, Splitting};
use crate::torus::{ExactPoint, ToralAutomorphism, TorusPoint};

/// Largest lattice region enumerated exhaustively.
const REGION_BUDGET: f64 = 200_000.0;
/// Candidates checked in exact arithmetic before giving up.
const EXACT_CHECKS: usize = 32;
/// Expected lattice points in a proxy search ball.
const PROXY_BUDGET: f64 = 10_000.0;

/// A periodic point produced by the closing construction.
#[derive(Clone, Debug, Serialize)]
pub struct ClosingResult {
    pub point: TorusPoint,
    pub period: u64,
    /// `max_{0 <= i <= horizon} d(A^i x, A^i y)`, from exact orbits.
    pub error: f64,
    pub horizon: u64,
    /// Whether every lattice point of the necessary region was examined.
    pub exhaustive: bool,
}

/// Closing construction for a fixed `(A, n, eps)`, reusable across points.
///
/// For `x` with lift `x'`, every period-`n` point is `y = (I - A^n)^{-1} w`
/// for an integer `w`, and `x - y` lifts to `e = (I - A^n)^{-1} v` with
/// `v = x' - A^n x' - w`. In the real eigenbasis `c(A^i e) = D^i c(e)`, so
/// `|A^i e| < eps` for all `i <= h` confines every block of `c(v)` to a disc
/// of radius `gamma_b eps |1 - lambda_b^n| / max_{i <= h} |lambda_b|^i`. The
/// lattice points of that region are enumerated, together with the minimizer
/// of the proxy cost `max(|P_s v|, |P_c v|, |A^{-k} P_u v|)`, and ranked by
/// the true tracing error.
pub struct Closer<'a> {
    a: &'a ToralAutomorphism,
    split: &'a Splitting,
    metric: Metric<'a>,
    n: u64,
    eps: f64,
    horizon: u64,
    an: IntMatrix,
    adj: IntMatrix,
    det: BigInt,
    /// `H_i = P D^i (I - D^n)^{-1} P^{-1}`, so `A^i e = H_i v`.
    h: Vec<DMatrix<f64>>,
    region: Option<DMatrix<f64>>,
    radius: f64,
    block_limits: Vec<f64>,
    /// Proxy forms and per-block scales, one per backward exponent.
    proxies: Vec<(DMatrix<f64>, Vec<f64>)>,
}

impl<'a> Closer<'a> {
    /// Traces indices `0..=floor((1 - eps) n)`.
    pub fn new(a: &'a ToralAutomorphism, n: u64, eps: f64, metric: Metric<'a>) -> Result<Self> {
        let horizon = ((1.0 - eps) * n as f64).floor().max(0.0) as u64;
        Self::with_horizon(a, n, eps, horizon.min(n.saturating_sub(1)), metric)
    }

    /// Traces indices `0..=horizon`.
    pub fn with_horizon(
        a: &'a ToralAutomorphism,
        n: u64,
        eps: f64,
        horizon: u64,
        metric: Metric<'a>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("period must be positive".into()));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Precondition(format!("eps = {eps} outside (0, 1)")));
        }
        let split = a.splitting()?;
        let d = a.dim();
        let an = a.matrix().pow(n);
        let m = IntMatrix::identity(d).sub(&an);
        let det = m.det()?;
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let adj = m.adjugate()?;

        let p = split.basis();
        let p_inv = split.basis_inverse();
        let dm = split.block_diagonal();
        let dn = dm.pow(n as u32);
        let inv_one_minus = (DMatrix::<f64>::identity(d, d) - &dn)
            .try_inverse()
            .ok_or(Error::Singular)?;
        let mut h = Vec::with_capacity(horizon as usize + 1);
        let mut di = DMatrix::<f64>::identity(d, d);
        for _ in 0..=horizon {
            h.push(p * &di * &inv_one_minus * p_inv);
            di = &di * dm;
        }

        // Per-block bound |c_b(u)| <= gamma_b |u| for the metric.
        let gamma: Vec<f64> = split
            .blocks()
            .iter()
            .map(|b| match metric {
                Metric::Torus => (0..b.size)
                    .map(|k| p_inv.row(b.start + k).iter().map(|x| x.abs()).sum::<f64>().powi(2))
                    .sum::<f64>()
                    .sqrt(),
                Metric::Adapted(s) => 1.0 / s.kappa(),
            })
            .collect();
        let block_limits: Vec<f64> = split
            .blocks()
            .iter()
            .zip(&gamma)
            .map(|(b, g)| {
                let growth = b.modulus.max(1.0).powf(horizon as f64);
                let one_minus = (num_complex::Complex64::new(1.0, 0.0) - b.eigenvalue.powu(n as u32)).norm();
                g * eps * one_minus / growth
            })
            .collect();
        let region = scaled_rows(split, p_inv, |i| 1.0 / block_limits[i]);
        let radius = (split.blocks().len() as f64).sqrt();
        let volume = unit_ball_volume(d) * radius.powi(d as i32) / region.determinant().abs();
        let region = (volume.is_finite() && volume <= REGION_BUDGET).then_some(region);

        // Proxy backward exponents: the unstable part of `A^i e` is roughly
        // `lambda^{i - n} v_u`, so `k` near `n - horizon` balances the blocks.
        // Each `k` is lowered until the proxy ball of radius `eps` holds a
        // small number of lattice points, which keeps the search cheap and
        // the candidates short.
        let proxy_form = |k: u64| {
            let scale: Vec<f64> = split
                .blocks()
                .iter()
                .map(|b| if b.regime == Regime::Unstable { b.modulus.powf(-(k as f64)) } else { 1.0 })
                .collect();
            (scaled_rows(split, p_inv, |i| split.kappa() * scale[i]), scale)
        };
        let gap = n - horizon.min(n);
        let mut exponents = Vec::new();
        for k in [gap, gap.saturating_sub(1), gap.saturating_sub(2), ((n as f64 * eps / 4.0).floor() as u64).min(n / 2)] {
            let mut k = k;
            while k > 0 {
                let (form, _) = proxy_form(k);
                let count = unit_ball_volume(d) * (eps * radius).powi(d as i32) / form.determinant().abs();
                if count.is_finite() && count <= PROXY_BUDGET {
                    break;
                }
                k -= 1;
            }
            exponents.push(k);
        }
        exponents.sort_unstable();
        exponents.dedup();
        let proxies: Vec<(DMatrix<f64>, Vec<f64>)> = exponents.into_iter().map(proxy_form).collect();

        Ok(Self {
            a,
            split,
            metric,
            n,
            eps,
            horizon,
            an,
            adj,
            det,
            h,
            region,
            radius,
            block_limits,
            proxies,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Whether the necessary region is small enough to be enumerated.
    pub fn is_exhaustive(&self) -> bool {
        self.region.is_some()
    }

    fn proxy_cost(&self, v: &[f64], scale: &[f64]) -> f64 {
        let c = self.split.coordinates(v);
        let norms = self.split.block_norms(&c);
        self.split.kappa() * norms.iter().zip(scale).map(|(n, s)| n * s).fold(0.0, f64::max)
    }

    fn within_block_limits(&self, v: &[f64]) -> bool {
        let c = self.split.coordinates(v);
        self.split.block_norms(&c).iter().zip(&self.block_limits).all(|(n, r)| *n <= r * (1.0 + 1e-9))
    }

    /// `max_{i <= h} |A^i e|` in floating point, stopping early above `cap`.
    fn float_error(&self, v: &[f64], cap: f64) -> f64 {
        let v = DVector::from_column_slice(v);
        let mut worst = 0.0f64;
        for hi in &self.h {
            let u = hi * &v;
            let d = match self.metric {
                Metric::Torus => u.amax(),
                Metric::Adapted(s) => s.adapted_norm(u.as_slice()),
            };
            worst = worst.max(d);
            if worst > cap {
                break;
            }
        }
        worst
    }

    /// The period-`n` point `(I - A^n)^{-1} w mod 1`.
    fn periodic_point(&self, w: &[BigInt]) -> ExactPoint {
        let num = self.adj.mul_vec(w);
        if self.det.is_negative() {
            ExactPoint::from_parts(num.into_iter().map(|x| -x).collect(), -self.det.clone())
        } else {
            ExactPoint::from_parts(num, self.det.clone())
        }
    }

    /// Exact tracing error over `0..=horizon`.
    fn exact_error(&self, x: &ExactPoint, y: &ExactPoint) -> f64 {
        let mut xs = x.clone();
        let mut ys = y.clone();
        let mut worst = 0.0f64;
        for _ in 0..=self.horizon {
            worst = worst.max(self.metric.distance_exact(&xs, &ys));
            xs = self.a.power_apply_exact(&xs, 1);
            ys = self.a.power_apply_exact(&ys, 1);
        }
        worst
    }

    /// Closes the orbit of `x`.
    pub fn close(&self, x: &TorusPoint) -> Result<ClosingResult> {
        x.check_dim(self.a.dim())?;
        let xe = x.to_exact();
        let lift = xe.lift();
        let image = self.an.to_rat().mul_vec(&lift);
        // v_total = x' - A^n x' = k0 + f with k0 integral and f in [-1/2, 1/2].
        let mut k0 = Vec::with_capacity(lift.len());
        let mut f = Vec::with_capacity(lift.len());
        for (p, q) in lift.iter().zip(&image) {
            let v: Rational = p - q;
            let r = (&v + Rational::new(1.into(), 2.into())).floor().to_integer();
            f.push(to_f64(&(v - Rational::from_integer(r.clone()))));
            k0.push(r);
        }

        let mut cands: Vec<(f64, f64, Vec<i64>)> = Vec::new();
        let push = |w: &[i64], this: &Self, cands: &mut Vec<(f64, f64, Vec<i64>)>| {
            let v: Vec<f64> = f.iter().zip(w).map(|(f, w)| f - *w as f64).collect();
            let err = this.float_error(&v, f64::INFINITY);
            cands.push((err, this.proxy_cost(&v, &this.proxies[0].1), w.to_vec()));
        };
        let mut exhaustive = false;
        if let Some(g) = &self.region {
            let mut pts = Vec::new();
            let res = enumerate_ellipsoid(g, &f, self.radius, (4.0 * REGION_BUDGET) as usize, |w| {
                let v: Vec<f64> = f.iter().zip(w).map(|(f, w)| f - *w as f64).collect();
                if self.within_block_limits(&v) {
                    pts.push(w.to_vec());
                }
            });
            if res.is_ok() {
                exhaustive = true;
                for w in pts {
                    let v: Vec<f64> = f.iter().zip(&w).map(|(f, w)| f - *w as f64).collect();
                    let err = self.float_error(&v, self.eps * 4.0);
                    cands.push((err, self.proxy_cost(&v, &self.proxies[0].1), w));
                }
            }
        }
        let zero = vec![0i64; f.len()];
        push(&zero, self, &mut cands);
        for (form, scale) in &self.proxies {
            let cost0 = self.proxy_cost(&f, scale).min(self.eps);
            let radius = cost0 * (self.split.blocks().len() as f64).sqrt();
            if let Ok(Some((w, _))) = minimize_in_ellipsoid(form, &f, radius, 100_000, |w| {
                let v: Vec<f64> = f.iter().zip(w).map(|(f, w)| f - *w as f64).collect();
                self.proxy_cost(&v, scale)
            }) {
                push(&w, self, &mut cands);
            }
        }
        cands.sort_by(|p, q| {
            p.0.partial_cmp(&q.0)
                .unwrap()
                .then(p.1.partial_cmp(&q.1).unwrap())
                .then(p.2.cmp(&q.2))
        });
        cands.dedup_by(|p, q| p.2 == q.2);

        let mut best: Option<(ExactPoint, f64)> = None;
        for (_, _, w) in cands.iter().take(EXACT_CHECKS) {
            let full: Vec<BigInt> = k0.iter().zip(w).map(|(k, w)| k + BigInt::from(*w)).collect();
            let y = self.periodic_point(&full);
            debug_assert_eq!(y.apply_unimodular(&self.an), y);
            let err = self.exact_error(&xe, &y);
            if err < self.eps {
                return Ok(ClosingResult {
                    point: TorusPoint::Exact(y),
                    period: self.n,
                    error: err,
                    horizon: self.horizon,
                    exhaustive,
                });
            }
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((y, err));
            }
        }
        let (y, error) = best.expect("at least one candidate");
        Err(Error::ClosingFailed { best: Box::new(TorusPoint::Exact(y)), error, eps: self.eps })
    }
}

/// `diag(scale_b) P^{-1}` with the scale applied per block row.
fn scaled_rows(split: &Splitting, p_inv: &DMatrix<f64>, scale: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let mut g = p_inv.clone();
    for (i, b) in split.blocks().iter().enumerate() {
        let s = scale(i);
        for k in 0..b.size {
            let mut row = g.row_mut(b.start + k);
            row *= s;
        }
    }
    g
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Periodic point of period `n` whose orbit `eps`-traces that of `x` on
/// `0 <= i <= (1 - eps) n`. When the matrix has unimodular eigenvalues, `n`
/// must belong to `periods` if one is given.
pub fn close_orbit(
    a: &ToralAutomorphism,
    x: &TorusPoint,
    n: u64,
    eps: f64,
    periods: Option<&PeriodSet>,
) -> Result<ClosingResult> {
    if let Some(p) = periods {
        if !p.contains(n) {
            return Err(Error::Precondition(format!("period {n} is not in the period set")));
        }
    }
    Closer::new(a, n, eps, Metric::Torus)?.close(x)
}

/// Exhaustive reference: the period-`n` point minimizing the tracing error.
pub fn best_periodic_point(
    a: &ToralAutomorphism,
    x: &TorusPoint,
    n: u64,
    horizon: u64,
    metric: Metric<'_>,
) -> Result<(ExactPoint, f64)> {
    let xe = x.to_exact();
    let mut best: Option<(ExactPoint, f64)> = None;
    for y in crate::torus::periodic_points(a, n)? {
        let mut xs = xe.clone();
        let mut ys = y.clone();
        let mut worst = 0.0f64;
        for _ in 0..=horizon {
            worst = worst.max(metric.distance_exact(&xs, &ys));
            xs = a.power_apply_exact(&xs, 1);
            ys = a.power_apply_exact(&ys, 1);
        }
        if best.as_ref().is_none_or(|(_, e)| worst < *e) {
            best = Some((y, worst));
        }
    }
    best.ok_or_else(|| Error::Verification("no periodic points".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::parse("2,1;1,1").unwrap()
    }

    #[test]
    fn origin_closes_to_itself() {
        let a = cat();
        for n in 1..6 {
            let r = close_orbit(&a, &TorusPoint::zero(2), n, 0.1, None).unwrap();
            assert_eq!(r.point, TorusPoint::zero(2));
        }
    }

    #[test]
    fn periodic_point_is_returned_unchanged() {
        let a = cat();
        let x = TorusPoint::from_ratios(&[(1, 3), (1, 3)]);
        for n in [4, 8, 12] {
            let r = close_orbit(&a, &x, n, 0.1, None).unwrap();
            assert_eq!(r.point, x);
            assert_eq!(r.error, 0.0);
        }
    }

    #[test]
    fn matches_brute_force_at_period_twelve() {
        let a = cat();
        let x = TorusPoint::exact(&[rat(1, 5), rat(2, 5)]);
        let horizon = (0.9f64 * 12.0).floor() as u64;
        let (_, best) = best_periodic_point(&a, &x, 12, horizon, Metric::Torus).unwrap();
        let got = close_orbit(&a, &x, 12, 0.1, None);
        if best < 0.1 {
            let r = got.unwrap();
            assert!(r.error < 0.1);
            assert!((r.error - best).abs() < 1e-12, "{} vs {}", r.error, best);
        } else {
            assert!(got.is_err());
        }
    }

    #[test]
    fn output_is_exactly_periodic() {
        let a = cat();
        let x = TorusPoint::parse("0.123,0.456").unwrap();
        let r = match close_orbit(&a, &x, 30, 0.1, None) {
            Ok(r) => r.point,
            Err(Error::ClosingFailed { best, .. }) => *best,
            Err(e) => panic!("{e}"),
        };
        let y = r.as_exact().unwrap();
        assert_eq!(&a.power_apply_exact(y, 30), y);
    }

    #[test]
    fn singular_period_rejected() {
        let u = ToralAutomorphism::parse("0,-1;1,0").unwrap();
        assert!(close_orbit(&u, &TorusPoint::zero(2), 4, 0.1, None).is_err());
    }
}
