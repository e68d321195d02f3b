//! Integer points in ellipsoids (Fincke-Pohst enumeration).
//!
//! The searches behind the closing lemma, the tracing construction and the
//! adapted quotient metric all reduce to: list every `w in Z^d` with
//! `|G (w - t)|_2 <= r` for a real `d x d` matrix `G`. After a QR
//! factorization `G = Q R` this is `|R (w - t)|_2 <= r`, which is enumerated
//! coordinate by coordinate from the last one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative slack added to the radius so that boundary points are not lost
/// to rounding.
const RADIUS_SLACK: f64 = 1e-9;

/// Calls `visit` for every integer `w` with `|G (w - t)|_2 <= radius`.
///
/// Fails with `Budget` once more than `limit` points have been produced.
/// Returns the number of points visited.
pub fn enumerate_ellipsoid(
    g: &DMatrix<f64>,
    center: &[f64],
    radius: f64,
    limit: usize,
    mut visit: impl FnMut(&[i64]),
) -> Result<usize> {
    let d = center.len();
    assert_eq!((g.nrows(), g.ncols()), (d, d), "shape mismatch");
    let r = g.clone().qr().r();
    if (0..d).any(|i| r[(i, i)].abs() < 1e-300 || !r[(i, i)].is_finite()) {
        return Err(Error::Precondition("degenerate quadratic form".into()));
    }
    let r2 = (radius * (1.0 + RADIUS_SLACK) + 1e-300).powi(2);
    let mut w = vec![0i64; d];
    let mut count = 0usize;
    recurse(&r, center, d, r2, &mut w, &mut count, limit, &mut visit)?;
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    r: &DMatrix<f64>,
    t: &[f64],
    level: usize,
    budget: f64,
    w: &mut [i64],
    count: &mut usize,
    limit: usize,
    visit: &mut impl FnMut(&[i64]),
) -> Result<()> {
    if level == 0 {
        *count += 1;
        if *count > limit {
            return Err(Error::Budget(format!("lattice enumeration exceeded {limit} points")));
        }
        visit(w);
        return Ok(());
    }
    let i = level - 1;
    let d = t.len();
    let s: f64 = (i + 1..d).map(|j| r[(i, j)] * (w[j] as f64 - t[j])).sum();
    let rii = r[(i, i)];
    let c = t[i] - s / rii;
    let half = budget.max(0.0).sqrt() / rii.abs();
    let lo = (c - half).ceil();
    let hi = (c + half).floor();
    if !(lo.is_finite() && hi.is_finite()) || hi - lo > 1e9 {
        return Err(Error::Budget("lattice enumeration range too wide".into()));
    }
    let mut k = lo as i64;
    while (k as f64) <= hi {
        w[i] = k;
        let e = rii * (k as f64 - t[i]) + s;
        let rest = budget - e * e;
        if rest >= 0.0 {
            recurse(r, t, level - 1, rest, w, count, limit, visit)?;
        }
        k += 1;
    }
    Ok(())
}

/// Minimizes `cost(w)` over integer `w` in the ellipsoid
/// `|G (w - t)|_2 <= radius`; ties go to the lexicographically smallest `w`.
pub fn minimize_in_ellipsoid(
    g: &DMatrix<f64>,
    center: &[f64],
    radius: f64,
    limit: usize,
    mut cost: impl FnMut(&[i64]) -> f64,
) -> Result<Option<(Vec<i64>, f64)>> {
    let mut best: Option<(Vec<i64>, f64)> = None;
    enumerate_ellipsoid(g, center, radius, limit, |w| {
        let c = cost(w);
        let better = match &best {
            None => true,
            Some((bw, bc)) => c < *bc || (c == *bc && w < bw.as_slice()),
        };
        if better {
            best = Some((w.to_vec(), c));
        }
    })?;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_disc_has_five_points() {
        let g = DMatrix::<f64>::identity(2, 2);
        let mut pts = Vec::new();
        enumerate_ellipsoid(&g, &[0.0, 0.0], 1.0, 100, |w| pts.push(w.to_vec())).unwrap();
        pts.sort();
        assert_eq!(pts, vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn matches_brute_force_on_skewed_form() {
        let g = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.1, 2.0, 0.7, -0.4, 0.0, 0.5]);
        let t = [0.3, -1.2, 2.6];
        let radius = 2.5;
        let mut got = Vec::new();
        enumerate_ellipsoid(&g, &t, radius, 10_000, |w| got.push(w.to_vec())).unwrap();
        got.sort();
        let mut want = Vec::new();
        for a in -20..=20i64 {
            for b in -20..=20i64 {
                for c in -20..=20i64 {
                    let v = nalgebra::DVector::from_vec(vec![
                        a as f64 - t[0],
                        b as f64 - t[1],
                        c as f64 - t[2],
                    ]);
                    if (&g * v).norm() <= radius {
                        want.push(vec![a, b, c]);
                    }
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn budget_is_enforced() {
        let g = DMatrix::<f64>::identity(2, 2);
        assert!(enumerate_ellipsoid(&g, &[0.0, 0.0], 10.0, 5, |_| {}).is_err());
    }

    #[test]
    fn minimizer_breaks_ties_lexicographically() {
        let g = DMatrix::<f64>::identity(1, 1);
        let best = minimize_in_ellipsoid(&g, &[0.5], 1.0, 100, |w| (w[0] as f64 - 0.5).abs())
            .unwrap()
            .unwrap();
        assert_eq!(best.0, vec![0]);
    }
}
