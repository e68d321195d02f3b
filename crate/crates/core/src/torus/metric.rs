use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Subtorus, TorusPoint};
use crate::error::Result;
use crate::exact::to_f64;

/// `x - y` lifted to `[-1/2, 1/2)^d`; exact subtraction when both points are
/// exact, so the result is correctly rounded.
pub fn difference_f64(x: &TorusPoint, y: &TorusPoint) -> Vec<f64> {
    match (x, y) {
        (TorusPoint::Exact(a), TorusPoint::Exact(b)) => a.centered_diff(b).iter().map(to_f64).collect(),
        _ => {
            let a = x.to_f64();
            let b = y.to_f64();
            a.iter().zip(&b).map(|(a, b)| centered(a - b)).collect()
        }
    }
}

/// Representative of `t` modulo 1 in `[-1/2, 1/2)`.
pub fn centered(t: f64) -> f64 {
    let r = t - (t + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Max-coordinate circle distance.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    x.check_dim(y.dim())?;
    Ok(sup_circle(&difference_f64(x, y)))
}

pub(crate) fn sup_circle(diff: &[f64]) -> f64 {
    diff.iter().map(|t| centered(*t).abs()).fold(0.0, f64::max)
}

/// Accuracy of [`quotient_distance`].
pub const QUOTIENT_TOLERANCE: f64 = 1e-7;
const QUOTIENT_NODE_LIMIT: usize = 2_000_000;

/// `min_{v in Y} d(x, y + v)`.
///
/// `Y = B [0,1)^k` for the primitive basis `B`, so this is a minimum over the
/// parameter cube. The cube is refined by branch and bound: on a sub-box each
/// coordinate of `B t` ranges over an exact interval, and the circle distance
/// from that interval gives a lower bound for the box.
pub fn quotient_distance(x: &TorusPoint, y: &TorusPoint, sub: &Subtorus) -> Result<f64> {
    x.check_dim(sub.ambient_dim())?;
    y.check_dim(sub.ambient_dim())?;
    let delta = difference_f64(x, y);
    let k = sub.dim();
    if k == 0 {
        return Ok(sup_circle(&delta));
    }
    let b = sub.basis().to_f64();
    let d = delta.len();
    let eval = |t: &[f64]| -> f64 {
        (0..d)
            .map(|i| {
                let s: f64 = (0..k).map(|j| b[(i, j)] * t[j]).sum();
                centered(delta[i] - s).abs()
            })
            .fold(0.0, f64::max)
    };
    let lower = |lo: &[f64], hi: &[f64]| -> f64 {
        (0..d)
            .map(|i| {
                let (mut a, mut c) = (0.0, 0.0);
                for j in 0..k {
                    let (u, v) = (b[(i, j)] * lo[j], b[(i, j)] * hi[j]);
                    a += u.min(v);
                    c += u.max(v);
                }
                interval_circle_distance(delta[i] - c, delta[i] - a)
            })
            .fold(0.0, f64::max)
    };

    let mid = |lo: &[f64], hi: &[f64]| -> Vec<f64> { lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect() };
    let lo0 = vec![0.0; k];
    let hi0 = vec![1.0; k];
    let mut best = eval(&lo0).min(eval(&mid(&lo0, &hi0)));
    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: lower(&lo0, &hi0), lo: lo0, hi: hi0 });
    let mut nodes = 0usize;
    while let Some(node) = heap.pop() {
        if node.bound >= best - QUOTIENT_TOLERANCE {
            break;
        }
        nodes += 1;
        if nodes > QUOTIENT_NODE_LIMIT {
            break;
        }
        // Split the widest side.
        let j = (0..k)
            .max_by(|&a, &b| (node.hi[a] - node.lo[a]).partial_cmp(&(node.hi[b] - node.lo[b])).unwrap())
            .unwrap();
        let m = 0.5 * (node.lo[j] + node.hi[j]);
        for (l, h) in [(node.lo[j], m), (m, node.hi[j])] {
            let mut lo = node.lo.clone();
            let mut hi = node.hi.clone();
            lo[j] = l;
            hi[j] = h;
            best = best.min(eval(&mid(&lo, &hi)));
            let bound = lower(&lo, &hi);
            if bound < best - QUOTIENT_TOLERANCE {
                heap.push(Node { bound, lo, hi });
            }
        }
    }
    Ok(best)
}

/// `min_{s in [a, c]} |s|` on the circle `R / Z`.
fn interval_circle_distance(a: f64, c: f64) -> f64 {
    if c - a >= 1.0 {
        return 0.0;
    }
    let shift = (a + 0.5).floor();
    let (a, c) = (a - shift, c - shift);
    // a in [-1/2, 1/2), c < a + 1.
    if a <= 0.0 && c >= 0.0 || c >= 1.0 {
        0.0
    } else if a > 0.0 {
        a.min((1.0 - c).max(0.0))
    } else {
        c.abs()
    }
}

struct Node {
    bound: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Min-heap on the lower bound.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::IntMatrix;

    fn p(s: &str) -> TorusPoint {
        TorusPoint::parse(s).unwrap()
    }

    #[test]
    fn wraparound() {
        assert!((torus_distance(&p("0.9,0"), &p("0.1,0")).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(torus_distance(&p("1/3,1/2"), &p("1/3,1/2")).unwrap(), 0.0);
        assert!(torus_distance(&p("0,0"), &p("0,0,0")).is_err());
    }

    #[test]
    fn quotient_by_vertical_circle() {
        let y = Subtorus::new(IntMatrix::from_i64_rows(&[vec![0], vec![1]])).unwrap();
        let d = quotient_distance(&p("0.3,0.7"), &p("0.1,0.2"), &y).unwrap();
        assert!((d - 0.2).abs() < 1e-6);
    }

    #[test]
    fn quotient_by_trivial_subgroup_is_torus_distance() {
        let y = Subtorus::trivial(2);
        let (a, b) = (p("0.3,0.7"), p("0.95,0.2"));
        assert_eq!(quotient_distance(&a, &b, &y).unwrap(), torus_distance(&a, &b).unwrap());
    }

    #[test]
    fn quotient_by_diagonal() {
        let y = Subtorus::new(IntMatrix::from_i64_rows(&[vec![1], vec![1]])).unwrap();
        // x - y = (0.1, 0.3): best t = 0.2 leaves (-0.1, 0.1).
        let d = quotient_distance(&p("0.1,0.3"), &p("0,0"), &y).unwrap();
        assert!((d - 0.1).abs() < 1e-6);
        let d = quotient_distance(&p("0.25,0.25"), &p("0,0"), &y).unwrap();
        assert!(d < 1e-6);
    }

    #[test]
    fn interval_distance_cases() {
        assert_eq!(interval_circle_distance(-0.1, 0.1), 0.0);
        assert!((interval_circle_distance(0.2, 0.3) - 0.2).abs() < 1e-15);
        assert!((interval_circle_distance(0.6, 0.9) - 0.1).abs() < 1e-12);
        assert!((interval_circle_distance(-0.3, -0.2) - 0.2).abs() < 1e-12);
        assert_eq!(interval_circle_distance(0.6, 1.1), 0.0);
    }
}
