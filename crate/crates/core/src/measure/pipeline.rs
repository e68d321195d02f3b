use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::empirical::EmpiricalMeasure;
use super::metric::{calibrate_delta, pairing_distance_bound_check, weak_star_distance, Distance, MetricFamily, PairingCheck};
use crate::error::{Error, Result};
use crate::exact::{centered_frac, from_f64, jordan_unipotent, to_f64, IntMatrix, Rational};
use crate::specification::{spacing_constant, trace_spec_periodic, Segment, Specification};
use crate::torus::{exact_period, orbit_exact, solve_periodic_in_coset, ExactPoint, Subtorus, ToralAutomorphism, TorusPoint};
use crate::unipotent::{interval_permutation_with, Approximator, IntervalOptions, SupportDescriptor, SymbolicPoint};

/// Extra bits of the generic point beyond the orbit growth.
const GUARD_BITS: u64 = 128;

/// Controls of [`dpm_pipeline`].
#[derive(Clone, Debug, Serialize)]
pub struct PipelineOptions {
    pub eps: f64,
    /// Lower bound for the period `q`.
    pub q_min: u64,
    pub q_cap: u64,
    /// Samples and seed of the point-mass continuity calibration.
    pub calibration_samples: usize,
    pub seed: u64,
    /// Attempts, each doubling `q_min`, before giving up on the final bound.
    pub attempts: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { eps: 0.25, q_min: 0, q_cap: 1_000_000, calibration_samples: 200, seed: 0, attempts: 6 }
    }
}

/// Output of [`dpm_pipeline`].
#[derive(Clone, Debug, Serialize)]
pub struct PipelineResult {
    /// The periodic point `z - w`.
    #[serde(serialize_with = "crate::serde_util::display_str")]
    pub point: TorusPoint,
    pub q: u64,
    /// True when `x` itself was periodic and its orbit was returned.
    pub shortcut: bool,
    pub delta: f64,
    pub spacing: u64,
    #[serde(rename = "K")]
    pub k: u64,
    pub eta: f64,
    /// Accuracy demanded from the quotient matching.
    pub quotient_eps: f64,
    /// Bit length of the approximant index used on the quotient.
    pub approximant_bits: u64,
    /// `|Lambda|` out of `blocks` sampled times `iK`.
    pub lambda: usize,
    pub blocks: usize,
    pub segments: usize,
    /// Fraction of `n < q` with `d(T^n (z - w), T^{pi~(n)} x) < delta`.
    pub close_fraction: f64,
    pub pairing: Option<PairingCheck>,
    pub distance_to_orbit_measure: Distance,
    pub distance_to_target: Option<Distance>,
    pub bound: f64,
    pub periodic: bool,
    pub within_bound: bool,
    #[serde(skip)]
    pub measure: EmpiricalMeasure,
}

/// `eps + 1 - (1 - eps)^2 (1/(1 + eps) - 2 eps)`.
pub fn pipeline_bound(eps: f64) -> f64 {
    eps + 1.0 - (1.0 - eps).powi(2) * (1.0 / (1.0 + eps) - 2.0 * eps)
}

/// Validated inputs shared by all attempts.
struct Setup<'a> {
    a: &'a ToralAutomorphism,
    y: &'a Subtorus,
    ya: ToralAutomorphism,
    quotient: IntMatrix,
    mu: &'a SupportDescriptor,
    x: &'a SymbolicPoint,
}

/// Periodic point `z - w` whose orbit measure approximates the orbit measure
/// of the generic point `x`, for `A` with an invariant subtorus `Y` on which
/// `A` is hyperbolic and a unipotent action on `T^d / Y`.
///
/// Stages: `0` validation, `1` calibration of `delta`, `M`, `K`, `eta`,
/// `2` matching on the quotient, `3` periodic lift of `z` and the
/// discrepancies `y_i`, `4` periodic tracing in `Y`, `5` verification and
/// measurement. `mu_quotient` is given in the complementary coordinates of
/// the completion of `Y`'s basis.
pub fn dpm_pipeline(
    a: &ToralAutomorphism,
    y: &Subtorus,
    mu_quotient: &SupportDescriptor,
    x: &SymbolicPoint,
    target: Option<&EmpiricalMeasure>,
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    let s0 = |e: Error| e.at_stage("0");
    let d = a.dim();
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(s0(Error::Precondition(format!("eps must lie in (0, 1), got {}", opts.eps))));
    }
    if y.ambient_dim() != d {
        return Err(s0(Error::DimensionMismatch { expected: d, got: y.ambient_dim() }));
    }
    if x.dim() != d {
        return Err(s0(Error::DimensionMismatch { expected: d, got: x.dim() }));
    }
    let m_y = y.restriction(a.matrix()).map_err(s0)?;
    let quotient = y.quotient_action(a.matrix()).map_err(s0)?;
    if y.dim() == 0 || y.dim() == d {
        return Err(s0(Error::Precondition("Y must be a proper nontrivial subtorus".into())));
    }
    let ya = ToralAutomorphism::new(m_y).map_err(s0)?;
    if !ya.splitting().map_err(s0)?.is_hyperbolic() {
        return Err(s0(Error::NotHyperbolic));
    }
    jordan_unipotent(&quotient.to_rat()).map_err(s0)?;
    if mu_quotient.dim() != d - y.dim() {
        return Err(s0(Error::DimensionMismatch { expected: d - y.dim(), got: mu_quotient.dim() }));
    }
    mu_quotient.check_consistency(&quotient).map_err(s0)?;
    if let Some(t) = target {
        if t.dim() != d {
            return Err(s0(Error::SpaceMismatch(format!("{} vs torus-{d}", t.space()))));
        }
    }
    let family = MetricFamily::torus(d);
    let bound = pipeline_bound(opts.eps) + family.certified_error();

    if let Some(xe) = x.as_exact() {
        let q = exact_period(a, &xe, opts.q_cap)
            .ok_or_else(|| s0(Error::Budget(format!("period of x exceeds {}", opts.q_cap))))?;
        let measure = EmpiricalMeasure::from_orbit(a, &xe, q as usize)?;
        let zero = Distance { value: 0.0, certified_error: family.certified_error() };
        let distance_to_target = target.map(|t| weak_star_distance(&measure, t, &family)).transpose()?;
        let within_bound = distance_to_target.is_none_or(|t| t.value <= bound);
        return Ok(PipelineResult {
            point: TorusPoint::Exact(xe),
            q,
            shortcut: true,
            delta: 0.0,
            spacing: 0,
            k: 0,
            eta: 0.0,
            quotient_eps: 0.0,
            approximant_bits: 0,
            lambda: 0,
            blocks: 0,
            segments: 0,
            close_fraction: 1.0,
            pairing: None,
            distance_to_orbit_measure: zero,
            distance_to_target,
            bound,
            periodic: true,
            within_bound,
            measure,
        });
    }

    let setup = Setup { a, y, ya, quotient, mu: mu_quotient, x };
    let cal = Calibration::new(&setup, &family, opts).map_err(|e| e.at_stage("1"))?;
    let mut q_min = opts.q_min.max((cal.k as f64 / opts.eps).ceil() as u64 + 1);
    let mut last = None;
    for _ in 0..opts.attempts.max(1) {
        let out = attempt(&setup, &cal, &family, target, q_min, bound, opts)?;
        if out.within_bound {
            return Ok(out);
        }
        q_min = out.q.saturating_mul(2);
        last = Some(out);
        if q_min > opts.q_cap {
            break;
        }
    }
    match last {
        Some(out) => Ok(out),
        None => Err(Error::Budget("no pipeline attempt ran".into()).at_stage("5")),
    }
}

/// Parameters chosen once, in the order `delta`, `M`, `K`, `eta`.
struct Calibration {
    delta: f64,
    eps_y: f64,
    spacing: u64,
    k: u64,
    eta: f64,
    eps_q: f64,
}

impl Calibration {
    fn new(s: &Setup, family: &MetricFamily, opts: &PipelineOptions) -> Result<Self> {
        let eps = opts.eps;
        let delta = calibrate_delta(family, eps, opts.calibration_samples, opts.seed)?.delta;
        // Distances in Y coordinates grow by at most |B| when embedded.
        let b_norm = to_f64(&Rational::from_integer(s.y.basis().inf_norm()));
        let eps_y = delta / (2.0 * b_norm);
        let spacing = spacing_constant(&s.ya, eps_y / 2.0)?;
        let mut k = (spacing as f64 / eps).ceil() as u64 + 1;
        while k.gcd(&s.mu.m) != 1 {
            k += 1;
        }
        let mut power = IntMatrix::identity(s.a.dim());
        let mut norm = BigInt::one();
        for _ in 0..k {
            norm = norm.max(power.inf_norm());
            power = power.mul(s.a.matrix());
        }
        let eta = eps.min(delta / 2.0 / to_f64(&Rational::from_integer(norm)));
        let wc_norm = complement_norm(s.y);
        Ok(Self { delta, eps_y, spacing, k, eta, eps_q: eta / wc_norm })
    }
}

/// Max row sum of the complementary columns of the completion of `Y`.
fn complement_norm(y: &Subtorus) -> f64 {
    let w = y.completion();
    let k = y.dim();
    (0..w.rows())
        .map(|i| (k..w.cols()).map(|j| to_f64(&Rational::from_integer(w.get(i, j).abs()))).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0)
}

fn attempt(
    s: &Setup,
    cal: &Calibration,
    family: &MetricFamily,
    target: Option<&EmpiricalMeasure>,
    q_min: u64,
    bound: f64,
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    let (a, y, d, k) = (s.a, s.y, s.a.dim(), cal.k);
    let ky = y.dim();

    // Stage 2: matching on the quotient.
    let w_inv_bits = y.completion_inverse().inf_norm().bits() + 2;
    let quotient_point = |bits: u64| {
        let xa = s.x.approx(bits + w_inv_bits);
        let (_, comp) = y.split_coordinates(&xa.lift());
        ExactPoint::new(&comp)
    };
    let approximator = Approximator::new(&s.quotient, &s.mu.closure).map_err(|e| e.at_stage("2"))?;
    let eps_q_r = from_f64(cal.eps_q)?;
    let scale = approximator.error_bound(&BigInt::one()) * Rational::from_integer(4.into()) / &eps_q_r;
    let n_start = BigInt::one() << (scale.ceil().to_integer().bits().max(4));
    let c = approximator.c().to_u64().unwrap_or(u64::MAX);
    let iopts = IntervalOptions { n_start, q_min, q_cap: opts.q_cap, max_rounds: 40 };
    let q_ok = |q: u64| q % c == 0;
    let matching = interval_permutation_with(&s.quotient, s.mu, &quotient_point, k, cal.eps_q, &iopts, &q_ok)
        .map_err(|e| e.at_stage("2"))?;
    let q = matching.q;

    // Stage 3: periodic lift of z and the discrepancies y_i.
    let s3 = |e: Error| e.at_stage("3");
    let zq = matching.z.to_exact();
    let mut lift = vec![Rational::zero(); ky];
    lift.extend(zq.lift());
    let z0 = ExactPoint::new(&y.completion().to_rat().mul_vec(&lift));
    let z = solve_periodic_in_coset(a, y, &z0, q).map_err(s3)?;
    let growth = a.matrix().pow(q + k).inf_norm().bits();
    let fine = (1.0 / cal.eps_q).log2().ceil() as u64;
    let xh = s.x.approx(GUARD_BITS + growth + fine);
    let xs = orbit_exact(a, &xh, (q + k) as usize);
    let zs = orbit_exact(a, &z, q as usize);
    let blocks = matching.pi.len();
    let mut ys = Vec::with_capacity(blocks);
    let mut lambda = 0;
    for (i, &p) in matching.pi.iter().enumerate() {
        let diff = zs[i * k as usize].sub(&xs[p as usize]);
        let (cy, cq) = y.split_coordinates(&diff.lift());
        let close = cq.iter().all(|c| centered_frac(c).abs() < eps_q_r);
        if close {
            lambda += 1;
            ys.push(ExactPoint::new(&cy));
        } else {
            ys.push(ExactPoint::zero(ky));
        }
    }

    // Stage 4: periodic tracing in Y.
    let s4 = |e: Error| e.at_stage("4");
    let m = cal.spacing;
    if k <= m {
        return Err(s4(Error::Precondition(format!("K = {k} must exceed the spacing {m}"))));
    }
    let grow = 1.0 + cal.delta / 2.0;
    let last = (0..blocks).take_while(|&i| grow * ((i as u64 + 1) * k - m) as f64 <= q as f64).last();
    let r = last.ok_or_else(|| s4(Error::Precondition(format!("q = {q} too small for one segment"))))?;
    let segments: Vec<Segment> = (0..=r)
        .map(|i| {
            let start = i as u64 * k;
            Segment { point: TorusPoint::Exact(s.ya.power_apply_exact(&ys[i], -(start as i64))), a: start, b: start + k - m }
        })
        .collect();
    let spec = Specification::new(segments, m).map_err(s4)?;
    let traced = trace_spec_periodic(&s.ya, &spec, q, cal.eps_y, None).map_err(s4)?;
    let w = ExactPoint::new(&y.embed(&traced.point.to_exact().lift()));

    // Stage 5: verification and measurement.
    let out = z.sub(&w);
    let periodic = a.power_apply_exact(&out, q as i64) == out;
    if !periodic {
        return Err(Error::Verification("z - w is not periodic".into()).at_stage("5"));
    }
    let orbit = orbit_exact(a, &out, q as usize);
    let measure = EmpiricalMeasure::uniform(d, &orbit)?;
    let x_measure = EmpiricalMeasure::uniform(d, &xs[..q as usize])?;
    let distance_to_orbit_measure = weak_star_distance(&measure, &x_measure, family)?;
    let distance_to_target = target.map(|t| weak_star_distance(&measure, t, family)).transpose()?;

    let perm = extend_permutation(&matching.pi, k, r, q);
    let delta_r = from_f64(cal.delta)?;
    let close = (0..q as usize).filter(|&n| sup_exact(&orbit[n], &xs[perm[n]]) < delta_r).count();
    let paired: Vec<ExactPoint> = perm.iter().map(|&j| xs[j].clone()).collect();
    let pairing = pairing_distance_bound_check(&orbit, &paired, opts.eps, cal.delta, family)?;

    let within_bound = distance_to_orbit_measure.value <= bound && distance_to_target.is_none_or(|t| t.value <= bound);
    Ok(PipelineResult {
        point: TorusPoint::Exact(out),
        q,
        shortcut: false,
        delta: cal.delta,
        spacing: m,
        k,
        eta: cal.eta,
        quotient_eps: cal.eps_q,
        approximant_bits: matching.n.bits(),
        lambda,
        blocks,
        segments: r + 1,
        close_fraction: close as f64 / q as f64,
        pairing: Some(pairing),
        distance_to_orbit_measure,
        distance_to_target,
        bound,
        periodic,
        within_bound,
        measure,
    })
}

fn sup_exact(a: &ExactPoint, b: &ExactPoint) -> Rational {
    a.centered_diff(b).into_iter().map(|c| c.abs()).fold(Rational::zero(), |m, c| m.max(c))
}

/// Permutation of `0..q` with `pi~(iK + j) = pi(iK) + j` for blocks `i <= r`
/// and `j < K` where that stays below `q`; the remaining indices are paired
/// in increasing order.
fn extend_permutation(pi: &[u64], k: u64, r: usize, q: u64) -> Vec<usize> {
    let q = q as usize;
    let mut perm = vec![usize::MAX; q];
    let mut used = vec![false; q];
    for (i, &p) in pi.iter().enumerate().take(r + 1) {
        for j in 0..k as usize {
            let (n, t) = (i * k as usize + j, p as usize + j);
            if n < q && t < q && !used[t] {
                perm[n] = t;
                used[t] = true;
            }
        }
    }
    let mut free = (0..q).filter(|&t| !used[t]);
    for slot in perm.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = free.next().expect("counts match");
    }
    perm
}

/// Haar measure on `base + Y` approximated by the grid `base + B (i / g)`,
/// `i` in `{0..g-1}^k`; characters nontrivial on `Y` with
/// `|B^T k| < g` integrate to zero exactly.
pub fn fiber_grid_reference(y: &Subtorus, base: &ExactPoint, g: u64) -> Result<EmpiricalMeasure> {
    if g == 0 {
        return Err(Error::Precondition("grid size must be positive".into()));
    }
    let k = y.dim();
    let total = (g as usize).checked_pow(k as u32).ok_or_else(|| Error::Budget("grid too large".into()))?;
    let weight = Rational::new(BigInt::one(), BigInt::from(total));
    let base_lift = base.lift();
    let mut atoms = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx;
        let c: Vec<Rational> = (0..k)
            .map(|_| {
                let v = (rest % g as usize) as i64;
                rest /= g as usize;
                Rational::new(BigInt::from(v), BigInt::from(g))
            })
            .collect();
        let e = y.embed(&c);
        let p: Vec<Rational> = base_lift.iter().zip(&e).map(|(b, v)| b + v).collect();
        atoms.push((ExactPoint::new(&p), weight.clone()));
    }
    EmpiricalMeasure::from_weighted(y.ambient_dim(), atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (ToralAutomorphism, Subtorus) {
        (ToralAutomorphism::parse("1,0,0;1,2,1;0,1,1").unwrap(), Subtorus::parse("0,0;1,0;0,1").unwrap())
    }

    #[test]
    fn bound_value() {
        assert!((pipeline_bound(0.25) - 1.08125).abs() < 1e-12);
    }

    #[test]
    fn non_invariant_subtorus_fails_at_stage_zero() {
        let (a, _) = example();
        let y = Subtorus::parse("1,0;0,1;0,0").unwrap();
        let mu = SupportDescriptor::parse("a = phi; H = trivial; m = 1").unwrap();
        let x = SymbolicPoint::parse("phi, sqrt(2), sqrt(3)").unwrap();
        let err = dpm_pipeline(&a, &y, &mu, &x, None, &PipelineOptions::default()).unwrap_err();
        match err {
            Error::Stage { stage, source } => {
                assert_eq!(stage, "0");
                assert!(matches!(*source, Error::NotInvariant));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn periodic_input_returns_its_orbit() {
        let (a, y) = example();
        let mu = SupportDescriptor::parse("a = 1/2; H = trivial; m = 1").unwrap();
        let x = SymbolicPoint::parse("1/2, 0, 1/2").unwrap();
        let out = dpm_pipeline(&a, &y, &mu, &x, None, &PipelineOptions::default()).unwrap();
        assert!(out.shortcut && out.periodic);
        assert_eq!(out.q, 1);
        assert_eq!(out.distance_to_orbit_measure.value, 0.0);
    }

    #[test]
    fn grid_reference_kills_fiber_characters() {
        let (_, y) = example();
        let base = ExactPoint::new(&[Rational::new(1.into(), 3.into()), Rational::zero(), Rational::zero()]);
        let grid = fiber_grid_reference(&y, &base, 17).unwrap();
        assert_eq!(grid.len(), 289);
        let ints = super::super::metric::torus_integrals(&grid, &MetricFamily::torus(3)).unwrap();
        let freqs = MetricFamily::torus(3).frequencies();
        for (t, f) in freqs.iter().enumerate() {
            if f[1] != 0 || f[2] != 0 {
                assert!(ints[2 * t].abs() < 1e-12 && ints[2 * t + 1].abs() < 1e-12, "{f:?}");
            }
        }
    }
}
