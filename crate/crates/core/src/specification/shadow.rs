use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::tracing::trace_spec;
use super::{Segment, Specification};
use crate::error::{Error, Result};
use crate::exact::{from_f64, to_f64, IntMatrix, Rational};
use crate::torus::{ExactPoint, ToralAutomorphism, TorusPoint};

/// Constants of the shadowing subdivision.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowParams {
    pub eps: f64,
    /// Spacing `M` of the produced specification.
    pub spacing: u64,
    /// Segment length `L`.
    pub run_length: u64,
    /// Length `C` below which the first point traces the whole sequence.
    pub short_length: u64,
    /// Pseudo-orbit threshold `delta`.
    #[serde(serialize_with = "crate::serde_util::rational_str")]
    pub delta: Rational,
}

impl ShadowParams {
    /// `L > 4M/eps`, `C > max(L, 4(L + M)/eps)` and
    /// `delta = min(eps / (2 C max_{n <= C} |A^n|), 1/(2C))`, so that a
    /// run of at most `C` good links is traced by its first point.
    pub fn from_spacing(a: &ToralAutomorphism, eps: f64, spacing: u64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Precondition(format!("eps must lie in (0, 1), got {eps}")));
        }
        let m = spacing as f64;
        let run_length = (4.0 * m / eps).floor() as u64 + 1;
        let short_length = (run_length + 1).max((4.0 * (run_length + spacing) as f64 / eps).floor() as u64 + 1);
        let mut power = IntMatrix::identity(a.dim());
        let mut norm = power.inf_norm();
        for _ in 0..short_length {
            power = power.mul(a.matrix());
            norm = norm.max(power.inf_norm());
        }
        let c = Rational::from_integer(short_length.into());
        let eps_r = from_f64(eps)?;
        let two = Rational::from_integer(2.into());
        let by_growth = eps_r / (&two * &c * Rational::from_integer(norm));
        let by_count = Rational::one() / (two * c);
        Ok(Self { eps, spacing, run_length, short_length, delta: by_growth.min(by_count) })
    }

    /// Constants from the spacing constant of the tracing step at `eps/4`.
    pub fn for_eps(a: &ToralAutomorphism, eps: f64) -> Result<Self> {
        let m = super::spacing_constant(a, eps / 4.0)?;
        Self::from_spacing(a, eps, m)
    }

    pub fn delta_f64(&self) -> f64 {
        to_f64(&self.delta)
    }
}

/// Exact max-coordinate circle distance.
fn exact_distance(x: &ExactPoint, y: &ExactPoint) -> Rational {
    x.centered_diff(y).into_iter().map(|c| c.abs()).fold(Rational::zero(), |m, c| m.max(c))
}

/// Indices `n >= 1` of broken links `d(T x_{n-1}, x_n) >= delta`.
fn broken_links(a: &ToralAutomorphism, seq: &[ExactPoint], delta: &Rational) -> Vec<usize> {
    (1..seq.len()).filter(|&n| &exact_distance(&seq[n - 1].apply(a.matrix()), &seq[n]) >= delta).collect()
}

/// `(links - broken) / links > 1 - delta`, exactly; `links = n - 1`.
fn mostly_good(n: usize, broken: usize, delta: &Rational) -> bool {
    n <= 1 || Rational::from_integer(broken.into()) < delta * Rational::from_integer((n - 1).into())
}

/// `delta`-partial pseudo-orbit test: the fraction of links
/// `d(T x_{n-1}, x_n) < delta` exceeds `1 - delta`. Distances are exact.
pub fn check_pseudo_orbit(a: &ToralAutomorphism, seq: &[TorusPoint], delta: f64) -> Result<bool> {
    let delta = from_f64(delta)?;
    let exact: Vec<ExactPoint> = seq.iter().map(TorusPoint::to_exact).collect();
    check_pseudo_orbit_exact(a, &exact, &delta)
}

/// [`check_pseudo_orbit`] with a rational threshold.
pub fn check_pseudo_orbit_exact(a: &ToralAutomorphism, seq: &[ExactPoint], delta: &Rational) -> Result<bool> {
    if let Some(p) = seq.iter().find(|p| p.dim() != a.dim()) {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: p.dim() });
    }
    let broken = broken_links(a, seq, delta).len();
    Ok(mostly_good(seq.len(), broken, delta))
}

/// Subdivides the maximal runs of good links into segments
/// `(T^{-a} x_a; a, a + L)` at `a = n_k + i (L + M)`. A sequence of length
/// at most `C` without broken links yields an empty specification traced by
/// its first point.
pub fn pseudo_orbit_to_spec(a: &ToralAutomorphism, seq: &[TorusPoint], params: &ShadowParams) -> Result<Specification> {
    if seq.is_empty() {
        return Err(Error::Precondition("empty sequence".into()));
    }
    let exact: Vec<ExactPoint> = seq.iter().map(TorusPoint::to_exact).collect();
    if let Some(p) = exact.iter().find(|p| p.dim() != a.dim()) {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: p.dim() });
    }
    let n = exact.len() as u64;
    let broken = broken_links(a, &exact, &params.delta);
    if broken.is_empty() && n <= params.short_length {
        return Ok(Specification { segments: Vec::new(), spacing: params.spacing, trace_by_first: true });
    }
    let mut starts: Vec<u64> = vec![0];
    starts.extend(broken.iter().map(|&b| b as u64));
    let mut ends: Vec<u64> = starts[1..].to_vec();
    ends.push(n);
    let step = params.run_length + params.spacing;
    let mut segments = Vec::new();
    for (&lo, &hi) in starts.iter().zip(&ends) {
        let mut s = lo;
        while s + step <= hi {
            let point = a.power_apply_exact(&exact[s as usize], -(s as i64));
            segments.push(Segment { point: TorusPoint::Exact(point), a: s, b: s + params.run_length });
            s += step;
        }
    }
    Specification::new(segments, params.spacing)
}

/// `Lambda = {0 <= n < N : d(x_n, T^n y) < eps}` and `|Lambda| / N`.
pub fn sequence_tracing(a: &ToralAutomorphism, seq: &[TorusPoint], y: &TorusPoint, eps: f64) -> Result<(f64, Vec<u64>)> {
    y.check_dim(a.dim())?;
    if seq.is_empty() {
        return Err(Error::Precondition("empty sequence".into()));
    }
    let eps_r = from_f64(eps)?;
    let mut cur = y.to_exact();
    let mut hits = Vec::new();
    for (i, x) in seq.iter().enumerate() {
        x.check_dim(a.dim())?;
        if exact_distance(&x.to_exact(), &cur) < eps_r {
            hits.push(i as u64);
        }
        cur = cur.apply(a.matrix());
    }
    Ok((hits.len() as f64 / seq.len() as f64, hits))
}

/// Outcome of shadowing a partial pseudo-orbit.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowResult {
    pub spec: Specification,
    pub tracer: TorusPoint,
    pub fraction: f64,
    pub ok: bool,
}

/// Subdivides the sequence, traces the specification at `eps/4` and
/// measures the traced fraction of the whole sequence.
pub fn shadow_pseudo_orbit(
    a: &ToralAutomorphism,
    seq: &[TorusPoint],
    params: &ShadowParams,
) -> Result<ShadowResult> {
    let spec = pseudo_orbit_to_spec(a, seq, params)?;
    let tracer = if spec.is_empty() { seq[0].clone() } else { trace_spec(a, &spec, params.eps / 4.0)? };
    let (fraction, _) = sequence_tracing(a, seq, &tracer, params.eps)?;
    Ok(ShadowResult { ok: fraction > 1.0 - params.eps, spec, tracer, fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::parse("2,1;1,1").unwrap()
    }

    fn true_orbit(x: &TorusPoint, n: usize) -> Vec<TorusPoint> {
        crate::torus::orbit(&cat(), x, n).unwrap()
    }

    #[test]
    fn subdivision_constants() {
        let p = ShadowParams::from_spacing(&cat(), 0.1, 5).unwrap();
        assert_eq!(p.run_length, 201);
        assert_eq!(p.short_length, 8241);
        assert!(p.delta > Rational::zero() && p.delta < rat(1, 2 * 8241));
    }

    #[test]
    fn true_orbit_is_pseudo_orbit() {
        let seq = true_orbit(&TorusPoint::from_ratios(&[(1, 7), (2, 7)]), 50);
        assert!(check_pseudo_orbit(&cat(), &seq, 1e-9).unwrap());
        let p = ShadowParams::from_spacing(&cat(), 0.1, 5).unwrap();
        let spec = pseudo_orbit_to_spec(&cat(), &seq, &p).unwrap();
        assert!(spec.trace_by_first && spec.is_empty());
        let r = shadow_pseudo_orbit(&cat(), &seq, &p).unwrap();
        assert_eq!(r.fraction, 1.0);
    }

    #[test]
    fn broken_links_split_runs() {
        let a = cat();
        let mut seq = true_orbit(&TorusPoint::from_ratios(&[(1, 7), (2, 7)]), 40);
        seq.extend(true_orbit(&TorusPoint::from_ratios(&[(1, 3), (1, 5)]), 40));
        seq.extend(true_orbit(&TorusPoint::from_ratios(&[(2, 9), (5, 11)]), 40));
        let p = ShadowParams { eps: 0.5, spacing: 4, run_length: 10, short_length: 20, delta: rat(1, 1000) };
        let spec = pseudo_orbit_to_spec(&a, &seq, &p).unwrap();
        let starts: Vec<u64> = spec.segments.iter().map(|s| s.a).collect();
        assert_eq!(starts, vec![0, 14, 40, 54, 80, 94]);
        for s in &spec.segments {
            let x = a.power_apply_exact(&s.point.to_exact(), s.a as i64);
            assert_eq!(TorusPoint::Exact(x), seq[s.a as usize].clone().to_exact().into());
        }
        assert!(!check_pseudo_orbit(&a, &seq, 0.001).unwrap());
        assert!(check_pseudo_orbit(&a, &seq, 0.2).unwrap());
    }
}
