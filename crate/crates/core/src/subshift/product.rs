use std::collections::HashSet;

use serde::Serialize;

use super::cylinder::{cylinder_empirical, shift_distance, CylinderMeasure};
use super::word::{thue_morse, xp_periodic_point, MARKER};
use crate::error::{Error, Result};

/// Length of the Thue-Morse sample used as the reference measure.
pub const TM_REFERENCE_LEN: usize = 1 << 16;

/// Cylinder frequencies of the Thue-Morse measure over `{0, 1, a}`, read
/// cyclically from `u[0, 2^16)`. The cyclic wrap of a prefix of length
/// `2^k` is again a factor of `u`.
pub fn tm_reference(max_len: usize) -> Result<CylinderMeasure> {
    cylinder_empirical(&thue_morse(TM_REFERENCE_LEN).widen(), max_len)
}

/// Every cyclic window of length `window` of the `X_p` point with period
/// `p^n` either contains `a`, with consecutive occurrences exactly `p^n`
/// apart, or is a factor of `u`.
pub fn xp_window_check(p: u64, n: u32, window: usize) -> Result<bool> {
    let x = xp_periodic_point(p, n)?;
    let period = x.len();
    let u = thue_morse(TM_REFERENCE_LEN.max(8 * window));
    let factors: HashSet<&[u8]> = u.symbols().windows(window).collect();
    Ok((0..period).all(|start| {
        let w: Vec<u8> = (0..window).map(|i| x.at(start + i)).collect();
        let marks: Vec<usize> = (0..window).filter(|&i| w[i] == MARKER).collect();
        if marks.is_empty() {
            factors.contains(w.as_slice())
        } else {
            marks.windows(2).all(|m| m[1] - m[0] == period)
        }
    }))
}

/// Weighted distance between the product of two factor measures and the
/// diagonal image of the Thue-Morse measure, over cylinders of the product
/// shift on the pair alphabet `{0, 1, a}^2` (pair `(s, t)` has index
/// `3 s + t`), ordered by length and then lexicographically.
///
/// Both factors must be over `{0, 1, a}` with the reference's `L`.
pub fn product_diagonal_distance(mu1: &CylinderMeasure, mu2: &CylinderMeasure, tm: &CylinderMeasure) -> Result<f64> {
    for m in [mu1, mu2] {
        if m.alphabet() != 3 || m.max_len() != tm.max_len() || tm.alphabet() != 3 {
            return Err(Error::SpaceMismatch(format!("{} with L = {}", m.space(), m.max_len())));
        }
    }
    let (n1, n2, nt) = (mu1.sample() as f64, mu2.sample() as f64, tm.sample() as f64);
    let mut w = 0.25;
    let mut sum = 0.0;
    for len in 1..=tm.max_len() {
        let (c1, c2, ct) = (mu1.counts(len), mu2.counts(len), tm.counts(len));
        for pair in 0..9usize.pow(len as u32) {
            if w == 0.0 {
                return Ok(sum);
            }
            let (i1, i2) = split_pair_index(pair, len);
            let product = (c1[i1] as f64 / n1) * (c2[i2] as f64 / n2);
            let diagonal = if i1 == i2 { ct[i1] as f64 / nt } else { 0.0 };
            sum += w * (product - diagonal).abs();
            w *= 0.5;
        }
    }
    Ok(sum)
}

/// Splits a word over the pair alphabet into the indices of its two
/// coordinate words.
fn split_pair_index(mut pair: usize, len: usize) -> (usize, usize) {
    let (mut i1, mut i2, mut place) = (0, 0, 1);
    for _ in 0..len {
        let d = pair % 9;
        pair /= 9;
        i1 += (d / 3) * place;
        i2 += (d % 3) * place;
        place *= 3;
    }
    (i1, i2)
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorPoint {
    pub n: u32,
    pub period: u64,
    pub distance: f64,
}

/// Distances of the `X_p` periodic measures with periods `p^n` to the
/// Thue-Morse measure.
#[derive(Clone, Debug, Serialize)]
pub struct FactorCurve {
    pub p: u64,
    pub points: Vec<FactorPoint>,
    /// Each distance is at most the previous one.
    pub monotone: bool,
    /// The last distance is below the first.
    pub decreased: bool,
    pub final_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Budgets {
    pub maxpow2: u32,
    pub maxpow3: u32,
    #[serde(rename = "L")]
    pub max_len: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    pub budgets: Budgets,
    pub factor_curves: Vec<FactorCurve>,
    pub product_min_distance: f64,
    /// Exponents `(a, b)` attaining the minimum.
    pub product_min_at: (u32, u32),
    pub pairs: usize,
    pub delta0: f64,
    /// The two product cylinders used for `delta0`.
    pub delta0_cylinders: Vec<String>,
    /// Diagonal mass of those cylinders, zero since the factors are disjoint.
    pub diagonal_mass: f64,
    pub tm_reference_length: usize,
    /// [`xp_window_check`] with windows of length `2L` for every `p^n <= 256`.
    pub window_check: bool,
}

/// Factor curves for `p = 2, 3` and the product check against the diagonal
/// Thue-Morse measure over all pairs of periods `2^a`, `3^b`.
///
/// `delta0` bounds each product distance from below through the two
/// length-1 cylinders `[0] x [1]` and `[1] x [0]`, which have zero diagonal
/// mass: it is the minimum over the tested pairs of
/// `w(0,1) mu1[0] mu2[1] + w(1,0) mu1[1] mu2[0]`.
pub fn product_counterexample_report(maxpow2: u32, maxpow3: u32, max_len: usize) -> Result<ProductReport> {
    if maxpow2 == 0 || maxpow3 == 0 || max_len == 0 {
        return Err(Error::Precondition("budgets must be positive".into()));
    }
    let tm = tm_reference(max_len)?;
    let mut factor_curves = Vec::new();
    let mut factors: Vec<Vec<CylinderMeasure>> = Vec::new();
    for (p, maxpow) in [(2u64, maxpow2), (3, maxpow3)] {
        let mut points = Vec::new();
        let mut measures = Vec::new();
        for n in 1..=maxpow {
            let x = xp_periodic_point(p, n)?;
            let mu = cylinder_empirical(&x, max_len)?;
            let distance = shift_distance(&mu, &tm)?.value;
            points.push(FactorPoint { n, period: x.len() as u64, distance });
            measures.push(mu);
        }
        let monotone = points.windows(2).all(|w| w[1].distance <= w[0].distance);
        let (first, last) = (points[0].distance, points[points.len() - 1].distance);
        factor_curves.push(FactorCurve { p, points, monotone, decreased: last < first, final_distance: last });
        factors.push(measures);
    }

    // Weights of the pair cylinders (0,1) and (1,0): indices 2 and 4.
    let (w01, w10) = (2f64.powi(-3), 2f64.powi(-5));
    let mut product_min = f64::INFINITY;
    let mut product_min_at = (0, 0);
    let mut delta0 = f64::INFINITY;
    for (a, mu1) in factors[0].iter().enumerate() {
        for (b, mu2) in factors[1].iter().enumerate() {
            let d = product_diagonal_distance(mu1, mu2, &tm)?;
            if d < product_min {
                product_min = d;
                product_min_at = (a as u32 + 1, b as u32 + 1);
            }
            let f = |m: &CylinderMeasure, s: usize| m.count(1, s) as f64 / m.sample() as f64;
            delta0 = delta0.min(w01 * f(mu1, 0) * f(mu2, 1) + w10 * f(mu1, 1) * f(mu2, 0));
        }
    }
    let diagonal_mass = 0.0;
    let mut window_check = true;
    for (p, maxpow) in [(2u64, maxpow2), (3, maxpow3)] {
        for n in (1..=maxpow).take_while(|&n| p.pow(n) <= 256) {
            window_check &= xp_window_check(p, n, 2 * max_len)?;
        }
    }
    Ok(ProductReport {
        budgets: Budgets { maxpow2, maxpow3, max_len },
        factor_curves,
        product_min_distance: product_min,
        product_min_at,
        pairs: factors[0].len() * factors[1].len(),
        delta0,
        delta0_cylinders: vec!["[0]x[1]".into(), "[1]x[0]".into()],
        diagonal_mass,
        tm_reference_length: TM_REFERENCE_LEN,
        window_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_splits_digits() {
        // (0,1)(1,0) -> first word 01, second word 10.
        let pair = 9 + 3;
        assert_eq!(split_pair_index(pair, 2), (1, 3));
        assert_eq!(split_pair_index(4, 1), (1, 1));
    }

    #[test]
    fn windows_of_small_points() {
        for (p, n) in [(2, 1), (2, 4), (3, 2), (2, 8), (3, 5)] {
            assert!(xp_window_check(p, n, 8).unwrap(), "p = {p}, n = {n}");
        }
    }

    #[test]
    fn diagonal_distance_vanishes_on_the_diagonal_only_for_tm() {
        let tm = tm_reference(3).unwrap();
        // Product of TM with itself is not the diagonal measure.
        let d = product_diagonal_distance(&tm, &tm, &tm).unwrap();
        assert!(d > 0.0);
        assert!(product_diagonal_distance(&tm, &tm_reference(2).unwrap(), &tm).is_err());
    }

    #[test]
    fn small_report() {
        let r = product_counterexample_report(4, 3, 3).unwrap();
        assert_eq!(r.pairs, 12);
        assert!(r.delta0 > 0.0);
        assert!(r.product_min_distance >= r.delta0);
        assert!(r.window_check);
        assert!(r.factor_curves.iter().all(|c| c.decreased));
    }
}
