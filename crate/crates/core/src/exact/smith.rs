use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{floor_div, IntMatrix, RatMatrix};
use crate::error::Result;

/// `U M V = D` with `U`, `V` unimodular and `D` diagonal, `d_i | d_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    /// The diagonal entries `d_1, ..., d_min(m,n)` (non-negative).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let k = self.d.rows().min(self.d.cols());
        (0..k).map(|i| self.d.get(i, i).clone()).collect()
    }
}

/// Smith normal form of an integral matrix.
pub fn smith_normal_form(m: &RatMatrix) -> Result<SmithForm> {
    Ok(smith_int(&m.to_int()?))
}

/// Smith normal form by pivot-minimizing row/column elimination.
pub fn smith_int(m: &IntMatrix) -> SmithForm {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        loop {
            // Smallest nonzero entry of the trailing block becomes the pivot.
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = a.get(i, j);
                    if !x.is_zero()
                        && best.is_none_or(|(bi, bj)| x.abs() < a.get(bi, bj).abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(u, a, v);
            };
            a.swap_rows(t, pi);
            u.swap_rows(t, pi);
            a.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let pivot = a.get(t, t).clone();
            let mut dirty = false;
            for i in t + 1..rows {
                let q = floor_div(a.get(i, t), &pivot);
                if !q.is_zero() {
                    a.add_row_multiple(i, t, &-&q);
                    u.add_row_multiple(i, t, &-&q);
                }
                dirty |= !a.get(i, t).is_zero();
            }
            for j in t + 1..cols {
                let q = floor_div(a.get(t, j), &pivot);
                if !q.is_zero() {
                    a.add_col_multiple(j, t, &-&q);
                    v.add_col_multiple(j, t, &-&q);
                }
                dirty |= !a.get(t, j).is_zero();
            }
            if dirty {
                continue;
            }
            // Divisibility: fold an offending row into the pivot row.
            let offending = (t + 1..rows).find(|&i| {
                (t + 1..cols).any(|j| !a.get(i, j).mod_floor(&pivot).is_zero())
            });
            match offending {
                Some(i) => {
                    a.add_row_multiple(t, i, &BigInt::from(1));
                    u.add_row_multiple(t, i, &BigInt::from(1));
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
        }
    }
    finish(u, a, v)
}

fn finish(u: IntMatrix, d: IntMatrix, v: IntMatrix) -> SmithForm {
    SmithForm { u, d, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &IntMatrix) -> SmithForm {
        let s = smith_int(m);
        assert_eq!(s.u.mul(m).mul(&s.v), s.d);
        assert!(s.u.is_unimodular() && s.v.is_unimodular());
        for i in 0..s.d.rows() {
            for j in 0..s.d.cols() {
                if i != j {
                    assert!(s.d.get(i, j).is_zero());
                }
            }
        }
        let f = s.invariant_factors();
        for w in f.windows(2) {
            assert!(w[0].is_zero() && w[1].is_zero() || w[1].mod_floor(&w[0]).is_zero());
        }
        s
    }

    #[test]
    fn examples() {
        let s = check(&IntMatrix::from_i64_rows(&[vec![1, 1], vec![1, 0]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(1), BigInt::from(1)]);
        let s = check(&IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 4]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(2), BigInt::from(4)]);
        let s = check(&IntMatrix::from_i64_rows(&[vec![4, 3], vec![3, 1]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(1), BigInt::from(5)]);
    }

    #[test]
    fn divisibility_fix_up() {
        let s = check(&IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn rectangular_and_singular() {
        check(&IntMatrix::from_i64_rows(&[vec![2, 4, 6], vec![1, 3, 5]]));
        let s = check(&IntMatrix::from_i64_rows(&[vec![1, 2], vec![2, 4], vec![3, 6]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(1), BigInt::from(0)]);
    }

    #[test]
    fn rejects_fractions() {
        assert!(smith_normal_form(&RatMatrix::parse("1/2,0;0,1").unwrap()).is_err());
    }
}
