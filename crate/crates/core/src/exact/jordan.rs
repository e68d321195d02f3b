use num_traits::Zero;

use super::{kernel, lcm_denominators, rank, RatMatrix, Rational};
use crate::error::{Error, Result};

/// Jordan form of a unipotent matrix: `U = Q J Q^{-1}` with `Q` integral.
///
/// Chains of `N = U - I` are built top-down from the kernel filtration
/// `ker N ⊂ ker N^2 ⊂ ...`. A chain with top `v` of height `k` contributes the
/// columns `N^{k-1} v, ..., N v, v`, which gives a block with ones on the
/// superdiagonal. Each chain is scaled to clear denominators.
pub fn jordan_unipotent(u: &RatMatrix) -> Result<(RatMatrix, RatMatrix)> {
    if !u.is_square() {
        return Err(Error::NonSquare { rows: u.rows(), cols: u.cols() });
    }
    let d = u.rows();
    let n = u.sub(&RatMatrix::identity(d));
    let mut powers = vec![RatMatrix::identity(d)];
    while !powers.last().unwrap().is_zero() {
        if powers.len() > d {
            return Err(Error::NotUnipotent);
        }
        let next = powers.last().unwrap().mul(&n);
        powers.push(next);
    }
    let height = powers.len() - 1;
    let kernels: Vec<Vec<Vec<Rational>>> = powers.iter().map(kernel).collect();

    // covered[j]: vectors at level j already in some chain.
    let mut covered: Vec<Vec<Vec<Rational>>> = vec![Vec::new(); height + 1];
    let mut chains: Vec<Vec<Vec<Rational>>> = Vec::new();
    for level in (1..=height).rev() {
        let mut span: Vec<Vec<Rational>> = kernels[level - 1].clone();
        span.extend(covered[level].iter().cloned());
        let mut r = rank(&span);
        for cand in &kernels[level] {
            let mut trial = span.clone();
            trial.push(cand.clone());
            let r2 = rank(&trial);
            if r2 == r {
                continue;
            }
            span = trial;
            r = r2;
            let mut chain = vec![cand.clone()];
            for _ in 1..level {
                let next = n.mul_vec(chain.last().unwrap());
                chain.push(next);
            }
            for (i, v) in chain.iter().enumerate().skip(1) {
                covered[level - i].push(v.clone());
            }
            chain.reverse();
            let scale = Rational::from_integer(lcm_denominators(chain.iter().flatten()));
            for v in &mut chain {
                for x in v.iter_mut() {
                    *x *= &scale;
                }
            }
            chains.push(chain);
        }
    }

    let cols: Vec<Vec<Rational>> = chains.iter().flatten().cloned().collect();
    debug_assert_eq!(cols.len(), d);
    let q = RatMatrix::from_cols(&cols)?;
    let mut j = RatMatrix::identity(d);
    let mut offset = 0;
    for chain in &chains {
        for i in 1..chain.len() {
            j.set(offset + i - 1, offset + i, Rational::from_integer(1.into()));
        }
        offset += chain.len();
    }
    debug_assert!(u.mul(&q).sub(&q.mul(&j)).entries().iter().all(Zero::is_zero));
    Ok((q, j))
}
