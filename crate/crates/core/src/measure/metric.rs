use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::empirical::{fixed_point, EmpiricalMeasure};
use crate::error::{Error, Result};
use crate::torus::{sup_circle, ExactPoint};

/// Default number of torus test functions.
pub const TORUS_TERMS: usize = 64;

/// Enumerated test functions `f_1, f_2, ...` with weights `2^{-(n+1)}`.
///
/// Torus: characters `cos(2 pi k.x)`, `sin(2 pi k.x)` for `k != 0` with first
/// nonzero coordinate positive, ordered by max-norm and then
/// lexicographically, cosine before sine. Shift: cylinder indicators ordered
/// by word length and then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "space", rename_all = "lowercase")]
pub enum MetricFamily {
    Torus { dim: usize, terms: usize },
    Shift { alphabet: usize, max_len: usize },
}

impl MetricFamily {
    pub fn torus(dim: usize) -> Self {
        MetricFamily::Torus { dim, terms: TORUS_TERMS }
    }

    pub fn shift(alphabet: usize, max_len: usize) -> Self {
        MetricFamily::Shift { alphabet, max_len }
    }

    pub fn terms(&self) -> usize {
        match *self {
            MetricFamily::Torus { terms, .. } => terms,
            MetricFamily::Shift { alphabet, max_len } => (1..=max_len).map(|l| alphabet.pow(l as u32)).sum(),
        }
    }

    /// Bound on the omitted tail: weights `2^{-(n+1)}`, `n > N`, times the
    /// largest possible difference of integrals (2 for characters, 1 for
    /// indicators).
    pub fn certified_error(&self) -> f64 {
        let n = self.terms() as i32;
        match self {
            MetricFamily::Torus { .. } => 2f64.powi(-n),
            MetricFamily::Shift { .. } => 2f64.powi(-(n + 1)),
        }
    }

    /// The frequencies of the torus characters, one per cosine/sine pair.
    pub fn frequencies(&self) -> Vec<Vec<i64>> {
        match *self {
            MetricFamily::Torus { dim, terms } => frequencies(dim, terms.div_ceil(2)),
            MetricFamily::Shift { .. } => Vec::new(),
        }
    }
}

/// The first `count` frequencies of the canonical half lattice.
fn frequencies(dim: usize, count: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut r = 1i64;
    while out.len() < count {
        let side = (2 * r + 1) as usize;
        let mut shell = Vec::new();
        for idx in 0..side.pow(dim as u32) {
            let mut rest = idx;
            let k: Vec<i64> = (0..dim)
                .map(|_| {
                    let v = (rest % side) as i64 - r;
                    rest /= side;
                    v
                })
                .rev()
                .collect();
            let norm = k.iter().map(|v| v.abs()).max().unwrap_or(0);
            let canonical = k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0);
            if norm == r && canonical {
                shell.push(k);
            }
        }
        shell.sort();
        out.extend(shell);
        r += 1;
    }
    out.truncate(count);
    out
}

/// Weak-* distance with its truncation bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub value: f64,
    pub certified_error: f64,
}

/// `int f_n d mu` for the torus family, in enumeration order.
pub fn torus_integrals(mu: &EmpiricalMeasure, family: &MetricFamily) -> Result<Vec<f64>> {
    let (dim, terms) = match *family {
        MetricFamily::Torus { dim, terms } => (dim, terms),
        MetricFamily::Shift { .. } => return Err(Error::SpaceMismatch(format!("{} vs shift family", mu.space()))),
    };
    if dim != mu.dim() {
        return Err(Error::SpaceMismatch(format!("{} vs torus-{dim} family", mu.space())));
    }
    let freqs = family.frequencies();
    let atoms = mu.fixed_point_atoms();
    let mut out = vec![0.0; terms];
    for (t, k) in freqs.iter().enumerate() {
        let (mut c, mut s) = (0.0, 0.0);
        for (x, w) in &atoms {
            let (cos, sin) = character(k, x);
            c += w * cos;
            s += w * sin;
        }
        out[2 * t] = c;
        if 2 * t + 1 < terms {
            out[2 * t + 1] = s;
        }
    }
    Ok(out)
}

/// `(cos, sin)(2 pi k.x)` with `k.x` reduced modulo 1 in 64-bit fixed point.
fn character(k: &[i64], x: &[u64]) -> (f64, f64) {
    let phase = k.iter().zip(x).fold(0u64, |acc, (&kj, &xj)| acc.wrapping_add((kj as u64).wrapping_mul(xj)));
    let t = TAU * (phase as f64 / 18_446_744_073_709_551_616.0);
    (t.cos(), t.sin())
}

/// `sum_n 2^{-(n+1)} |int f_n d mu - int f_n d nu|` over the family.
pub fn weak_star_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, family: &MetricFamily) -> Result<Distance> {
    if mu.dim() != nu.dim() {
        return Err(Error::SpaceMismatch(format!("{} vs {}", mu.space(), nu.space())));
    }
    let a = torus_integrals(mu, family)?;
    let b = torus_integrals(nu, family)?;
    Ok(Distance { value: weighted_sum(&a, &b), certified_error: family.certified_error() })
}

/// `sum_n 2^{-(n+1)} |a_n - b_n|`, summed in index order.
pub fn weighted_sum(a: &[f64], b: &[f64]) -> f64 {
    let mut w = 0.25;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        sum += w * (x - y).abs();
        w *= 0.5;
    }
    sum
}

/// Truncated distance between two Dirac measures, from float coordinates.
fn dirac_distance(freqs: &[Vec<i64>], terms: usize, x: &[f64], y: &[f64]) -> f64 {
    let mut w = 0.25;
    let mut sum = 0.0;
    for (t, k) in freqs.iter().enumerate() {
        let px: f64 = k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
        let py: f64 = k.iter().zip(y).map(|(a, b)| *a as f64 * b).sum();
        sum += w * ((TAU * px).cos() - (TAU * py).cos()).abs();
        w *= 0.5;
        if 2 * t + 1 < terms {
            sum += w * ((TAU * px).sin() - (TAU * py).sin()).abs();
            w *= 0.5;
        }
    }
    sum
}

/// Continuity constant for the point-mass implication
/// `d(x, y) < delta => d(delta_x, delta_y) < eps`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaCalibration {
    pub eps: f64,
    /// Half the smallest violating radius found by sampling.
    pub sampled: f64,
    /// `eps / L` with `L = sum_n 2^{-(n+1)} 2 pi |k_n|_1`, the Lipschitz
    /// constant of `x -> delta_x` for the truncated metric.
    pub analytic: f64,
    /// `min(sampled, analytic)`.
    pub delta: f64,
}

/// Sampling estimate (halved) and Lipschitz bound for the torus family.
pub fn calibrate_delta(family: &MetricFamily, eps: f64, samples: usize, seed: u64) -> Result<DeltaCalibration> {
    let (dim, terms) = match *family {
        MetricFamily::Torus { dim, terms } => (dim, terms),
        MetricFamily::Shift { .. } => return Err(Error::Precondition("delta calibration needs a torus family".into())),
    };
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    let freqs = family.frequencies();
    let mut lip = 0.0;
    let mut w = 0.25;
    for (t, k) in freqs.iter().enumerate() {
        let l1: f64 = k.iter().map(|v| v.abs() as f64).sum();
        let pair = if 2 * t + 1 < terms { w + w / 2.0 } else { w };
        lip += pair * TAU * l1;
        w /= 4.0;
    }
    let analytic = eps / lip;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.5;
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let mut u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        u.iter_mut().for_each(|v| *v /= m);
        let at = |t: f64| {
            let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + t * b).collect();
            dirac_distance(&freqs, terms, &x, &y)
        };
        let steps = 200;
        let mut prev = 0.0;
        for s in 1..=steps {
            let t = 0.5 * s as f64 / steps as f64;
            if t >= worst {
                break;
            }
            if at(t) >= eps {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if at(mid) >= eps {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                worst = worst.min(hi);
                break;
            }
            prev = t;
        }
    }
    let sampled = worst / 2.0;
    Ok(DeltaCalibration { eps, sampled, analytic, delta: sampled.min(analytic) })
}

/// Result of the convexity bound for paired point measures.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairingCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Pairs with `d(x_n, y_n) >= delta`.
    pub far: usize,
    pub ok: bool,
}

/// `d(m_xs, m_ys) <= eps + |{n : d(x_n, y_n) >= delta}| / q`.
pub fn pairing_distance_bound_check(
    xs: &[ExactPoint],
    ys: &[ExactPoint],
    eps: f64,
    delta: f64,
    family: &MetricFamily,
) -> Result<PairingCheck> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Precondition("paired samples must be non-empty and of equal length".into()));
    }
    let dim = xs[0].dim();
    let mu = EmpiricalMeasure::uniform(dim, xs)?;
    let nu = EmpiricalMeasure::uniform(dim, ys)?;
    let lhs = weak_star_distance(&mu, &nu, family)?.value;
    let far = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| sup_circle(&x.centered_diff(y).iter().map(crate::exact::to_f64).collect::<Vec<_>>()) >= delta)
        .count();
    let rhs = eps + far as f64 / xs.len() as f64;
    Ok(PairingCheck { lhs, rhs, far, ok: lhs <= rhs })
}

/// Fixed-point coordinates of a point, exposed for callers that evaluate
/// characters themselves.
pub fn fixed_point_coords(p: &ExactPoint) -> Vec<u64> {
    fixed_point(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn frequency_order() {
        let f = frequencies(2, 6);
        let want: Vec<Vec<i64>> = vec![vec![0, 1], vec![1, -1], vec![1, 0], vec![1, 1], vec![0, 2], vec![1, -2]];
        assert_eq!(f, want);
        assert_eq!(frequencies(2, 100).len(), 100);
        assert_eq!(frequencies(1, 3), vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn dirac_pair_matches_direct_series() {
        let fam = MetricFamily::torus(2);
        let a = EmpiricalMeasure::uniform(2, &[ExactPoint::zero(2)]).unwrap();
        let b = EmpiricalMeasure::uniform(2, &[ExactPoint::new(&[rat(1, 2), rat(0, 1)])]).unwrap();
        let d = weak_star_distance(&a, &b, &fam).unwrap();
        // Direct evaluation: cos(pi k_1) differs from 1 by 2 when k_1 is odd.
        let mut want = 0.0;
        for (t, k) in frequencies(2, 32).iter().enumerate() {
            let diff = (1.0 - (std::f64::consts::PI * k[0] as f64).cos()).abs();
            want += diff * 2f64.powi(-(2 * t as i32 + 2));
        }
        assert!((d.value - want).abs() < 1e-15);
        assert_eq!(d.certified_error, 2f64.powi(-64));
        assert_eq!(weak_star_distance(&a, &a, &fam).unwrap().value, 0.0);
        assert_eq!(weak_star_distance(&b, &a, &fam).unwrap().value, d.value);
    }

    #[test]
    fn calibration_is_valid() {
        let fam = MetricFamily::torus(2);
        let c = calibrate_delta(&fam, 0.25, 50, 0).unwrap();
        assert!(c.delta > 0.0 && c.delta <= c.analytic && c.delta <= c.sampled);
        let x = ExactPoint::new(&[rat(1, 7), rat(2, 9)]);
        let y = x.add(&ExactPoint::new(&[crate::exact::from_f64(c.delta * 0.99).unwrap(), rat(0, 1)]));
        let m = |p: &ExactPoint| EmpiricalMeasure::uniform(2, std::slice::from_ref(p)).unwrap();
        assert!(weak_star_distance(&m(&x), &m(&y), &fam).unwrap().value < 0.25);
    }

    #[test]
    fn pairing_bound_cases() {
        let fam = MetricFamily::torus(2);
        let xs: Vec<ExactPoint> = (0..10).map(|i| ExactPoint::new(&[rat(i, 10), rat(i, 7)])).collect();
        let same = pairing_distance_bound_check(&xs, &xs, 0.1, 0.01, &fam).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert!(same.ok && same.rhs == 0.1);
        let ys: Vec<ExactPoint> = xs.iter().map(|p| p.add(&ExactPoint::new(&[rat(1, 2), rat(1, 2)]))).collect();
        let far = pairing_distance_bound_check(&xs, &ys, 0.1, 0.01, &fam).unwrap();
        assert_eq!(far.far, 10);
        assert!(far.ok && far.lhs <= 1.0);
    }
}
