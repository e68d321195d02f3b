//! Specifications, tracing predicates, pseudo-orbits, the closing
//! construction and the inductive tracing construction on `T^d`.

mod closing;
mod shadow;
mod tracing;

pub use closing::{best_periodic_point, close_orbit, ClosingResult, Closer};
pub use shadow::{
    check_pseudo_orbit, check_pseudo_orbit_exact, pseudo_orbit_to_spec, sequence_tracing, shadow_pseudo_orbit,
    ShadowParams, ShadowResult,
};
pub use tracing::{spacing_constant, trace_spec, trace_spec_periodic};

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::spectral::Splitting;
use crate::torus::{sup_circle, ExactPoint, ToralAutomorphism, TorusPoint};

/// Distance used by the tracing predicates.
#[derive(Clone, Copy, Debug)]
pub enum Metric<'a> {
    /// Max-coordinate circle distance.
    Torus,
    /// Adapted quotient norm of a splitting.
    Adapted(&'a Splitting),
}

impl Metric<'_> {
    pub fn distance_exact(&self, x: &ExactPoint, y: &ExactPoint) -> f64 {
        let diff: Vec<f64> = x.centered_diff(y).iter().map(to_f64).collect();
        self.norm_of_difference(&diff)
    }

    /// Distance from a centered difference vector.
    pub fn norm_of_difference(&self, diff: &[f64]) -> f64 {
        match self {
            Metric::Torus => sup_circle(diff),
            Metric::Adapted(s) => s.quotient_norm(diff),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Torus => "torus",
            Metric::Adapted(_) => "adapted",
        }
    }
}

/// One orbit segment `(x; a, b)`: the points `A^n x` for `a <= n < b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub point: TorusPoint,
    pub a: u64,
    pub b: u64,
}

/// `M`-spaced specification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Specification {
    pub segments: Vec<Segment>,
    pub spacing: u64,
    /// Set by the shadowing subdivision when the sequence is short enough
    /// to be traced by its first point and no segments are produced.
    pub trace_by_first: bool,
}

impl Specification {
    /// Validates ordering and spacing.
    pub fn new(segments: Vec<Segment>, spacing: u64) -> Result<Self> {
        let s = Self { segments, spacing, trace_by_first: false };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.a >= seg.b {
                return Err(Error::Precondition(format!("segment {i} has a >= b")));
            }
            if i > 0 {
                let prev = &self.segments[i - 1];
                if seg.a < prev.b + self.spacing {
                    return Err(Error::Precondition(format!(
                        "segments {} and {i} are closer than M = {}",
                        i - 1,
                        self.spacing
                    )));
                }
            }
            if seg.point.dim() != self.segments[0].point.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.segments[0].point.dim(),
                    got: seg.point.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `b_r` (0 when empty).
    pub fn end(&self) -> u64 {
        self.segments.last().map_or(0, |s| s.b)
    }

    /// Smallest gap `a_{i+1} - b_i` (`None` for fewer than two segments).
    pub fn min_gap(&self) -> Option<u64> {
        self.segments.windows(2).map(|w| w[1].a - w[0].b).min()
    }

    /// Parses the text format: a header `M=<int>` and one `x ; a ; b` line
    /// per segment. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spacing = None;
        let mut segments = Vec::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(m) = line.strip_prefix("M=").or_else(|| line.strip_prefix("M =")) {
                let m = m.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad header '{line}'")))?;
                spacing = Some(m);
                continue;
            }
            let parts: Vec<&str> = line.split(';').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad segment line '{line}'")));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| Error::Parse(format!("bad index '{s}'")));
            segments.push(Segment { point: TorusPoint::parse(parts[0])?, a: num(parts[1])?, b: num(parts[2])? });
        }
        let spacing = spacing.ok_or_else(|| Error::Parse("missing 'M=' header".into()))?;
        Self::new(segments, spacing)
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M={}", self.spacing)?;
        for s in &self.segments {
            writeln!(f, "{} ; {} ; {}", s.point, s.a, s.b)?;
        }
        Ok(())
    }
}

/// Tracing indices of each segment.
#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub epsilon: f64,
    pub index_sets: Vec<Vec<u64>>,
    pub fractions: Vec<f64>,
    /// Largest distance over all in-segment indices.
    pub max_distance: f64,
    pub ok: bool,
}

impl TraceReport {
    /// True iff every in-segment index traces.
    pub fn is_full(&self) -> bool {
        self.fractions.iter().all(|&f| f == 1.0)
    }
}

/// `Lambda_i = {a_i <= n < b_i : d(A^n x_i, A^n y) < eps}`; `ok` iff every
/// `|Lambda_i| / (b_i - a_i) > 1 - eps`. Orbits are computed exactly.
pub fn check_partial_trace(
    a: &ToralAutomorphism,
    spec: &Specification,
    y: &TorusPoint,
    eps: f64,
    metric: Metric<'_>,
) -> Result<TraceReport> {
    spec.validate()?;
    y.check_dim(a.dim())?;
    let y = y.to_exact();
    let mut index_sets = Vec::new();
    let mut fractions = Vec::new();
    let mut max_distance = 0.0f64;
    for seg in &spec.segments {
        seg.point.check_dim(a.dim())?;
        let mut xs = a.power_apply_exact(&seg.point.to_exact(), seg.a as i64);
        let mut ys = a.power_apply_exact(&y, seg.a as i64);
        let mut set = Vec::new();
        for n in seg.a..seg.b {
            let d = metric.distance_exact(&xs, &ys);
            max_distance = max_distance.max(d);
            if d < eps {
                set.push(n);
            }
            xs = a.power_apply_exact(&xs, 1);
            ys = a.power_apply_exact(&ys, 1);
        }
        fractions.push(set.len() as f64 / (seg.b - seg.a) as f64);
        index_sets.push(set);
    }
    let ok = fractions.iter().all(|&f| f > 1.0 - eps);
    Ok(TraceReport { epsilon: eps, index_sets, fractions, max_distance, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> ToralAutomorphism {
        ToralAutomorphism::parse("2,1;1,1").unwrap()
    }

    #[test]
    fn text_format_round_trip() {
        let text = "M=3\n0,0 ; 0 ; 5\n1/2,1/2 ; 8 ; 13\n";
        let s = Specification::parse(text).unwrap();
        assert_eq!(s.segments.len(), 2);
        assert_eq!(s.to_string(), text);
        assert!(Specification::parse("M=5\n0,0;0;5\n0,0;7;9").is_err());
        assert!(Specification::parse("0,0;0;5").is_err());
    }

    #[test]
    fn self_trace_is_full() {
        let x = TorusPoint::parse("0.2,0.7").unwrap();
        let s = Specification::new(vec![Segment { point: x.clone(), a: 0, b: 30 }], 0).unwrap();
        let r = check_partial_trace(&cat(), &s, &x, 0.01, Metric::Torus).unwrap();
        assert!(r.ok && r.is_full());
        assert_eq!(r.max_distance, 0.0);
    }

    #[test]
    fn huge_eps_traces_anything() {
        let s = Specification::new(
            vec![Segment { point: TorusPoint::parse("0.2,0.7").unwrap(), a: 2, b: 9 }],
            0,
        )
        .unwrap();
        let r = check_partial_trace(&cat(), &s, &TorusPoint::zero(2), 0.51, Metric::Torus).unwrap();
        assert!(r.ok);
    }
}
