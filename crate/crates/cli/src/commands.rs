//! One function per subcommand, each returning parameters, results, checks
//! and optional CSV curves.

use std::path::PathBuf;

use clap::Args;
use num_bigint::BigInt;
use num_traits::Signed;
use serde_json::json;
use toral_dpm::exact::{smith_normal_form, IntMatrix, Polynomial, Rational};
use toral_dpm::measure::{self, fiber_grid_reference, EmpiricalMeasure, MetricFamily, PipelineOptions};
use toral_dpm::spectral::{bounded_below_set, newton_polygon, unstable_product_check};
use toral_dpm::specification::{self as spec, check_partial_trace, Metric, Specification};
use toral_dpm::subshift::product_counterexample_report;
use toral_dpm::torus::{self as torus, orbit_exact, ExactPoint, Subtorus, ToralAutomorphism, TorusPoint};
use toral_dpm::unipotent::{
    interval_permutation, is_periodic_with, periodic_approximants, SupportDescriptor, SymbolicPoint,
};
use toral_dpm::{Error, Result};

use crate::{Check, Common, Outcome};

/// Largest period-n count that is enumerated point by point.
const ENUMERATION_LIMIT: u64 = 200_000;
/// Points listed in the report.
const LISTED_POINTS: usize = 64;

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

#[derive(Args, Debug)]
pub struct PeriodicPointsArgs {
    /// Integer matrix, rows separated by ';'.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    #[arg(long, allow_hyphen_values = true)]
    pub n: u64,
}

pub fn periodic_points(a: &PeriodicPointsArgs) -> Result<Outcome> {
    let t = ToralAutomorphism::parse(&a.matrix)?;
    if a.n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let m = t.matrix().pow(a.n).sub(&IntMatrix::identity(t.dim()));
    let smith: BigInt = smith_normal_form(&m.to_rat())?.invariant_factors().iter().product::<BigInt>().abs();
    let det = t.periodic_count(a.n)?;
    let mut checks = vec![Check::new("smith_matches_det", smith == det, smith.to_string(), det.to_string())];
    let mut results = json!({ "count": det.to_string(), "invariant_factor_product": smith.to_string() });
    let mut curves = Vec::new();
    if det <= BigInt::from(ENUMERATION_LIMIT) {
        let pts = torus::periodic_points(&t, a.n)?;
        let fixed = pts.iter().all(|p| t.power_apply_exact(p, a.n as i64) == *p);
        checks.push(Check::new("enumeration_matches_count", BigInt::from(pts.len()) == det, pts.len(), det.to_string()));
        checks.push(Check::new("points_have_period_n", fixed, fixed, true));
        let text: Vec<String> = pts.iter().map(|p| TorusPoint::Exact(p.clone()).to_string()).collect();
        results["points"] = json!(text.iter().take(LISTED_POINTS).collect::<Vec<_>>());
        curves.push(("points.csv".into(), csv("point", text.iter().map(|p| format!("\"{p}\"")))));
    }
    Ok(Outcome { parameters: json!({ "matrix": a.matrix, "n": a.n }), results, checks, curves })
}

#[derive(Args, Debug)]
pub struct CloseOrbitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    /// Point, exact ("1/3,2/5") or decimal.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, allow_hyphen_values = true)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.05)]
    pub eps: f64,
    /// Horizon of the period set used when the matrix has unimodular eigenvalues.
    #[arg(long, allow_hyphen_values = true, default_value_t = 10_000)]
    pub horizon: u64,
}

pub fn close_orbit(a: &CloseOrbitArgs) -> Result<Outcome> {
    let t = ToralAutomorphism::parse(&a.matrix)?;
    let x = TorusPoint::parse(&a.point)?;
    let periods = if t.splitting()?.is_hyperbolic() {
        None
    } else {
        Some(bounded_below_set(t.splitting()?.char_poly(), 1, a.horizon.max(a.n))?)
    };
    let r = spec::close_orbit(&t, &x, a.n, a.eps, periods.as_ref())?;
    let y = r.point.to_exact();
    let periodic = t.power_apply_exact(&y, a.n as i64) == y;
    let checks = vec![
        Check::new("exact_period", periodic, r.period, a.n),
        Check::new("tracing_error", r.error < a.eps, r.error, a.eps),
    ];
    let parameters = json!({ "matrix": a.matrix, "point": a.point, "n": a.n, "eps": a.eps, "horizon": a.horizon });
    Ok(Outcome { parameters, results: json!(r), checks, curves: Vec::new() })
}

#[derive(Args, Debug)]
pub struct TraceSpecArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    /// Specification file: `M=<spacing>` then `point ; a ; b` lines.
    #[arg(long, allow_hyphen_values = true)]
    pub spec: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.1)]
    pub eps: f64,
    /// Period of the tracing point; omit for a non-periodic tracer.
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<u64>,
}

pub fn trace_spec(a: &TraceSpecArgs) -> Result<Outcome> {
    let t = ToralAutomorphism::parse(&a.matrix)?;
    let text = std::fs::read_to_string(&a.spec).map_err(|e| Error::Parse(format!("{}: {e}", a.spec.display())))?;
    let s = Specification::parse(&text)?;
    let (point, period) = match a.n {
        Some(n) => {
            let r = spec::trace_spec_periodic(&t, &s, n, a.eps, None)?;
            (r.point, Some(n))
        }
        None => (spec::trace_spec(&t, &s, a.eps)?, None),
    };
    let report = check_partial_trace(&t, &s, &point, a.eps, Metric::Torus)?;
    let mut checks = vec![Check::new("partial_trace", report.ok, report.fractions.clone(), 1.0 - a.eps)];
    if let Some(n) = period {
        let y = point.to_exact();
        let ok = t.power_apply_exact(&y, n as i64) == y;
        checks.push(Check::new("exact_period", ok, ok, n));
    }
    let parameters = json!({ "matrix": a.matrix, "spec": a.spec, "eps": a.eps, "n": a.n });
    let results = json!({ "point": point, "trace": report });
    Ok(Outcome { parameters, results, checks, curves: Vec::new() })
}

#[derive(Args, Debug)]
pub struct BoundedBelowArgs {
    /// Coefficients, constant first: "1,-1,-1,-1,1".
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    pub c: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 10_000)]
    pub horizon: u64,
}

pub fn bounded_below(a: &BoundedBelowArgs) -> Result<Outcome> {
    let f = Polynomial::parse(&a.poly)?;
    let set = bounded_below_set(&f, a.c, a.horizon)?;
    let delta = set.delta_value();
    let checks = vec![
        Check::new("gaps_bounded", set.max_gap() <= set.gap_bound, set.max_gap(), set.gap_bound),
        Check::new("delta_positive", delta > 0.0, delta, 0.0),
    ];
    let results = json!({
        "size": set.elements.len(),
        "first": set.elements.iter().take(LISTED_POINTS).collect::<Vec<_>>(),
        "max_gap": set.max_gap(),
        "gap_bound": set.gap_bound,
        "delta": set.delta,
        "angles": set.angles,
    });
    let curves = vec![("period_set.csv".into(), csv("n", set.elements.iter().map(u64::to_string)))];
    Ok(Outcome { parameters: json!({ "poly": a.poly, "c": a.c, "horizon": a.horizon }), results, checks, curves })
}

#[derive(Args, Debug)]
pub struct NewtonArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
    #[arg(long, allow_hyphen_values = true)]
    pub p: u64,
}

pub fn newton(a: &NewtonArgs) -> Result<Outcome> {
    let f = Polynomial::parse(&a.poly)?;
    let r = newton_polygon(&f, a.p)?;
    let total: usize = r.slope_multiplicities.iter().map(|(_, m)| m).sum();
    let checks = vec![Check::new("multiplicities_sum_to_degree", total == f.degree(), total, f.degree())];
    Ok(Outcome { parameters: json!({ "poly": a.poly, "p": a.p }), results: json!(r), checks, curves: Vec::new() })
}

#[derive(Args, Debug)]
pub struct ProductFormulaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub poly: String,
}

pub fn product_formula(a: &ProductFormulaArgs) -> Result<Outcome> {
    let f = Polynomial::parse(&a.poly)?;
    let r = unstable_product_check(&f, None)?;
    let checks = vec![Check::new("finite_product_equals_ell", r.holds, r.finite_product.to_string(), r.ell.to_string())];
    Ok(Outcome { parameters: json!({ "poly": a.poly }), results: json!(r), checks, curves: Vec::new() })
}

#[derive(Args, Debug)]
pub struct UnipotentApproxArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "1,1;0,1")]
    pub matrix: String,
    /// Orbit-closure descriptor, e.g. "a = 0, phi; H = 1;0; m = 1".
    #[arg(long, allow_hyphen_values = true)]
    pub descriptor: String,
    /// Comma-separated approximation indices.
    #[arg(long, allow_hyphen_values = true, default_value = "25,50,100,200")]
    pub n: String,
    /// Generic point whose orbit serves as the reference measure.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 100_000)]
    pub reference_len: usize,
    /// Allowed increase between consecutive distances.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.01)]
    pub slack: f64,
}

fn parse_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad integer '{p}'"))))
        .collect()
}

/// Orbit measure of a dyadic approximation of a symbolic point.
fn reference_measure(t: &ToralAutomorphism, x: &SymbolicPoint, len: usize) -> Result<EmpiricalMeasure> {
    let growth = t.matrix().pow(len as u64).inf_norm().bits();
    let xs = orbit_exact(t, &x.approx(96 + growth), len);
    EmpiricalMeasure::uniform(t.dim(), &xs)
}

pub fn unipotent_approx(a: &UnipotentApproxArgs) -> Result<Outcome> {
    let t = ToralAutomorphism::parse(&a.matrix)?;
    let mu = SupportDescriptor::parse(&a.descriptor)?;
    mu.check_consistency(t.matrix())?;
    let ns = parse_list(&a.n)?;
    let (c, approximants) = periodic_approximants(&t, &mu.closure, &ns)?;
    let reference = a.point.as_deref().map(SymbolicPoint::parse).transpose()?;
    let reference = reference.map(|x| reference_measure(&t, &x, a.reference_len)).transpose()?;
    let family = MetricFamily::torus(t.dim());
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut distances = Vec::new();
    for ap in &approximants {
        let x = ap.exact();
        let periodic = is_periodic_with(t.matrix(), &x, &ap.period)?;
        checks.push(Check::new(&format!("periodic_n{}", ap.n), periodic, ap.period.to_string(), ap.period.to_string()));
        let weak = match &reference {
            Some(r) => {
                let p = ap.period_u64().ok_or_else(|| Error::Budget("period too large".into()))?;
                let m = EmpiricalMeasure::from_orbit(&t, &x, p as usize)?;
                let d = measure::weak_star_distance(&m, r, &family)?.value;
                distances.push(d);
                Some(d)
            }
            None => None,
        };
        rows.push(json!({ "n": ap.n.to_string(), "period": ap.period.to_string(), "point": ap.point, "distance_to_target": ap.distance, "weak_star_distance": weak }));
    }
    if !distances.is_empty() {
        let monotone = distances.windows(2).all(|w| w[1] <= w[0] + a.slack);
        checks.push(Check::new("distances_non_increasing", monotone, &distances, a.slack));
    }
    let curves = vec![(
        "unipotent_curve.csv".into(),
        csv(
            "n,period,distance_to_target,weak_star_distance",
            approximants.iter().enumerate().map(|(i, ap)| {
                let w = distances.get(i).map(f64::to_string).unwrap_or_default();
                format!("{},{},{},{}", ap.n, ap.period, ap.distance, w)
            }),
        ),
    )];
    let parameters = json!({ "matrix": a.matrix, "descriptor": a.descriptor, "n": ns, "point": a.point, "reference_len": a.reference_len });
    Ok(Outcome { parameters, results: json!({ "c": c.to_string(), "approximants": rows }), checks, curves })
}

#[derive(Args, Debug)]
pub struct IntervalPermArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "1,1;0,1")]
    pub matrix: String,
    #[arg(long, allow_hyphen_values = true)]
    pub descriptor: String,
    /// Generic point, e.g. "sqrt(3)-1, phi".
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 7)]
    pub k: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.2)]
    pub eps: f64,
}

pub fn interval_perm(a: &IntervalPermArgs) -> Result<Outcome> {
    let t = ToralAutomorphism::parse(&a.matrix)?;
    let mu = SupportDescriptor::parse(&a.descriptor)?;
    let x = SymbolicPoint::parse(&a.point)?;
    let m = interval_permutation(&t, &mu, &x, a.k, a.eps)?;
    let need = (1.0 - a.eps) * m.q as f64 / a.k as f64;
    let checks = vec![Check::new("good_count", m.satisfies(a.eps), m.good_count, need)];
    let mut results = json!(m);
    results["pi"] = json!(m.pi.iter().take(LISTED_POINTS).collect::<Vec<_>>());
    let parameters = json!({ "matrix": a.matrix, "descriptor": a.descriptor, "point": a.point, "K": a.k, "eps": a.eps });
    Ok(Outcome { parameters, results, checks, curves: Vec::new() })
}

#[derive(Args, Debug)]
pub struct DpmPipelineArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "1,0,0;1,2,1;0,1,1")]
    pub matrix: String,
    /// Basis of the hyperbolic invariant subtorus (columns).
    #[arg(long, allow_hyphen_values = true, default_value = "0,0;1,0;0,1")]
    pub subtorus: String,
    /// Quotient orbit-closure descriptor in the complementary coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub descriptor: String,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.25)]
    pub eps: f64,
    /// Grid size of the fiber reference target; 0 disables it.
    #[arg(long, allow_hyphen_values = true, default_value_t = 317)]
    pub grid: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1_000_000)]
    pub q_cap: u64,
}

/// Haar measure on the fiber over a fixed quotient point, as a grid.
fn fiber_target(y: &Subtorus, mu: &SupportDescriptor, grid: u64) -> Result<EmpiricalMeasure> {
    if !mu.is_finite() || mu.m != 1 {
        return Err(Error::Precondition("the fiber target needs a single-point quotient descriptor".into()));
    }
    let mut lift = vec![Rational::from_integer(BigInt::from(0)); y.dim()];
    lift.extend(mu.a.approx(128).lift());
    let base = ExactPoint::new(&y.completion().to_rat().mul_vec(&lift));
    fiber_grid_reference(y, &base, grid)
}

pub fn dpm_pipeline(a: &DpmPipelineArgs, common: &Common) -> Result<Outcome> {
    let t = ToralAutomorphism::parse(&a.matrix)?;
    let y = Subtorus::parse(&a.subtorus)?;
    let mu = SupportDescriptor::parse(&a.descriptor)?;
    let x = SymbolicPoint::parse(&a.point)?;
    let target = if a.grid > 0 { Some(fiber_target(&y, &mu, a.grid)?) } else { None };
    let opts = PipelineOptions { eps: a.eps, q_cap: a.q_cap, seed: common.seed, ..PipelineOptions::default() };
    let r = measure::dpm_pipeline(&t, &y, &mu, &x, target.as_ref(), &opts)?;
    let mut checks = vec![
        Check::new("exactly_periodic", r.periodic, r.q, r.q),
        Check::new(
            "distance_to_orbit_measure",
            r.distance_to_orbit_measure.value <= r.bound,
            r.distance_to_orbit_measure.value,
            r.bound,
        ),
    ];
    if let Some(d) = &r.distance_to_target {
        checks.push(Check::new("distance_to_target", d.value <= r.bound, d.value, r.bound));
    }
    if let Some(p) = &r.pairing {
        checks.push(Check::new("pairing_bound", p.ok, p.lhs, p.rhs));
    }
    let parameters = json!({
        "matrix": a.matrix, "subtorus": a.subtorus, "descriptor": a.descriptor,
        "point": a.point, "eps": a.eps, "grid": a.grid, "q_cap": a.q_cap, "seed": common.seed,
    });
    Ok(Outcome { parameters, results: json!(r), checks, curves: Vec::new() })
}

#[derive(Args, Debug)]
pub struct SubshiftArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 10)]
    pub maxpow2: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 7)]
    pub maxpow3: u32,
    /// Longest cylinder word.
    #[arg(long = "L", default_value_t = 6)]
    pub max_len: usize,
    /// Bound on the last factor distance.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.05)]
    pub factor_bound: f64,
}

pub fn subshift(a: &SubshiftArgs) -> Result<Outcome> {
    let r = product_counterexample_report(a.maxpow2, a.maxpow3, a.max_len)?;
    let mut checks = Vec::new();
    let mut curves = Vec::new();
    for c in &r.factor_curves {
        checks.push(Check::new(&format!("factor_p{}_decreases", c.p), c.decreased, c.final_distance, c.points[0].distance));
        checks.push(Check::new(&format!("factor_p{}_final", c.p), c.final_distance < a.factor_bound, c.final_distance, a.factor_bound));
        curves.push((
            format!("factor_p{}.csv", c.p),
            csv("n,period,distance", c.points.iter().map(|p| format!("{},{},{}", p.n, p.period, p.distance))),
        ));
    }
    checks.push(Check::new("delta0_positive", r.delta0 > 0.0, r.delta0, 0.0));
    checks.push(Check::new("product_above_delta0", r.product_min_distance >= r.delta0, r.product_min_distance, r.delta0));
    checks.push(Check::new("diagonal_mass_zero", r.diagonal_mass == 0.0, r.diagonal_mass, 0.0));
    checks.push(Check::new("xp_windows", r.window_check, r.window_check, true));
    let parameters = json!({ "maxpow2": a.maxpow2, "maxpow3": a.maxpow3, "L": a.max_len, "factor_bound": a.factor_bound });
    Ok(Outcome { parameters, results: json!(r), checks, curves })
}
