use std::f64::consts::PI;

use serde::Serialize;

use super::arith::root_of_unity_order;
use super::roots::complex_roots;
use super::splitting::UNIMODULAR_THRESHOLD;
use crate::error::{Error, Result};
use crate::exact::Polynomial;

/// Bounded-gap set of periods in `cN` that keeps every unimodular eigenvalue
/// power away from 1.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodSet {
    pub modulus: u64,
    pub elements: Vec<u64>,
    pub gap_bound: u64,
    /// Achieved lower bound on `|lambda^n - 1|`; `None` stands for `+inf`
    /// (no unimodular eigenvalues).
    pub delta: Option<f64>,
    /// Arguments in `(0, pi)` of the tracked unimodular eigenvalues.
    pub angles: Vec<f64>,
}

impl PeriodSet {
    pub fn contains(&self, n: u64) -> bool {
        self.elements.binary_search(&n).is_ok()
    }

    /// `delta` as a float, with `+inf` for the empty constraint set.
    pub fn delta_value(&self) -> f64 {
        self.delta.unwrap_or(f64::INFINITY)
    }

    /// `min_{i} |lambda_i^n - 1|` (`+inf` without unimodular eigenvalues).
    pub fn distance_from_one(&self, n: u64) -> f64 {
        self.angles
            .iter()
            .map(|&t| chord(t, n))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest consecutive difference (including the first element).
    pub fn max_gap(&self) -> u64 {
        let mut prev = 0;
        let mut gap = 0;
        for &e in &self.elements {
            gap = gap.max(e - prev);
            prev = e;
        }
        gap
    }
}

/// `|e^{i n theta} - 1| = 2 |sin(n theta / 2)|`, with `n theta` reduced
/// modulo `2 pi` through the exact integer `n`.
fn chord(theta: f64, n: u64) -> f64 {
    let turns = theta / (2.0 * PI);
    // n * turns mod 1, splitting n to limit rounding.
    let (hi, lo) = (n >> 20, n & ((1 << 20) - 1));
    let f = ((hi as f64 * turns).fract() * (1u64 << 20) as f64 + lo as f64 * turns).fract();
    2.0 * (PI * f).sin().abs()
}

/// Inductive construction of `n_1 = 1 < n_2 < ...` with steps in
/// `1..=r+1`, where `r` counts unimodular eigenvalues up to conjugation.
///
/// `delta = min_{i, 1 <= m <= r+1} |lambda_i^{cm} - 1| / 2`. Two steps that
/// both land within `delta` of 1 for the same eigenvalue would differ by a
/// power with `|lambda^{cm} - 1| < 2 delta`, so each eigenvalue excludes at
/// most one of the `r + 1` candidate steps.
pub fn bounded_below_set(f: &Polynomial, c: u64, horizon: u64) -> Result<PeriodSet> {
    if c == 0 {
        return Err(Error::Precondition("modulus c must be positive".into()));
    }
    f.require_nonconstant()?;
    let angles: Vec<f64> = complex_roots(f)
        .into_iter()
        .filter(|z| (z.norm() - 1.0).abs() < UNIMODULAR_THRESHOLD && z.im >= 0.0)
        .map(|z| z.arg())
        .collect();
    if !angles.is_empty() {
        if let Some(order) = root_of_unity_order(f) {
            return Err(Error::RootOfUnity { order });
        }
    }
    let r = angles.len() as u64;
    let chord_c = |t: f64, n: u64| chord(t, c.saturating_mul(n));
    let delta = if angles.is_empty() {
        None
    } else {
        let m = angles
            .iter()
            .flat_map(|&t| (1..=r + 1).map(move |m| chord_c(t, m)))
            .fold(f64::INFINITY, f64::min);
        Some(0.5 * m)
    };
    let ok = |n: u64| match delta {
        None => true,
        Some(d) => angles.iter().all(|&t| chord_c(t, n) >= d),
    };
    let mut elements = Vec::new();
    let mut n = 1u64;
    while c.saturating_mul(n) <= horizon {
        elements.push(c * n);
        let step = (1..=r + 1).find(|&m| ok(n + m)).ok_or_else(|| {
            Error::Verification(format!("no admissible step after n = {n}"))
        })?;
        n += step;
    }
    let set = PeriodSet { modulus: c, elements, gap_bound: c * (r + 1), delta, angles };
    if let Some(d) = delta {
        let worst = set
            .elements
            .iter()
            .map(|&e| set.distance_from_one(e))
            .fold(f64::INFINITY, f64::min);
        if worst < d - 1e-9 || d <= 0.0 {
            return Err(Error::Verification(format!("period set bound {worst} < delta {d}")));
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperbolic_polynomial_gives_all_integers() {
        let s = bounded_below_set(&Polynomial::from_i64(&[1, -3, 1]), 1, 100).unwrap();
        assert_eq!(s.elements, (1..=100).collect::<Vec<_>>());
        assert_eq!(s.gap_bound, 1);
        assert_eq!(s.delta, None);
    }

    #[test]
    fn salem_quartic() {
        let s = bounded_below_set(&Polynomial::from_i64(&[1, -1, -1, -1, 1]), 1, 10_000).unwrap();
        assert!(s.gap_bound <= 3);
        assert!(s.max_gap() <= 3);
        let d = s.delta.unwrap();
        assert!(d > 0.0);
        let cos = (1.0 - 13f64.sqrt()) / 4.0;
        let theta = cos.acos();
        for &n in &s.elements {
            let z = num_complex::Complex64::from_polar(1.0, theta * n as f64);
            assert!((z - 1.0).norm() >= d - 1e-9);
        }
    }

    #[test]
    fn elements_are_multiples_of_modulus() {
        let s = bounded_below_set(&Polynomial::from_i64(&[1, -1, -1, -1, 1]), 6, 600).unwrap();
        assert!(s.elements.iter().all(|e| e % 6 == 0));
        assert!(s.max_gap() <= s.gap_bound);
    }

    #[test]
    fn chord_matches_direct_evaluation() {
        for n in [1u64, 7, 1000, 123_456_789] {
            let t = 1.234_f64;
            let direct = 2.0 * ((n as f64 * t) / 2.0).sin().abs();
            assert!((chord(t, n) - direct).abs() < 1e-6);
        }
    }
}
