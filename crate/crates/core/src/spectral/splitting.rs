use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::roots::complex_roots;
use crate::error::{Error, Result};
use crate::exact::{char_poly, Polynomial, RatMatrix};
use crate::lattice::enumerate_ellipsoid;

/// `||lambda| - 1|` below this counts as unimodular (central).
pub const UNIMODULAR_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Stable,
    Central,
    Unstable,
}

/// One real invariant block of the eigenbasis: a real eigenvalue (size 1) or
/// a conjugate pair spanned by `(Re v, Im v)` (size 2).
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub regime: Regime,
    pub start: usize,
    pub size: usize,
    #[serde(skip)]
    pub eigenvalue: Complex64,
    pub modulus: f64,
}

/// Archimedean stable/central/unstable splitting with an adapted norm.
///
/// With `c = P^{-1} v` the coordinates in the real eigenbasis, the adapted
/// norm is `kappa * max_b |c_b|_2` over blocks. `A` acts on each block by
/// multiplication with `|lambda_b|` times a rotation, so the norm contracts
/// exactly on `E^s`, expands on `E^u` and is preserved on `E^c`. The scale
/// `kappa` is chosen so that the adapted norm dominates the sup-norm.
#[derive(Clone, Debug)]
pub struct Splitting {
    dim: usize,
    blocks: Vec<Block>,
    p: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    block_diag: DMatrix<f64>,
    proj: [DMatrix<f64>; 3],
    rho: f64,
    kappa: f64,
    cond: f64,
    tol: f64,
    char_poly: Polynomial,
}

/// Builds the splitting of `A`; fails if the characteristic polynomial has a
/// repeated root.
pub fn archimedean_splitting(a: &RatMatrix, tol: f64) -> Result<Splitting> {
    Splitting::new(a, tol)
}

impl Splitting {
    pub fn new(a: &RatMatrix, tol: f64) -> Result<Self> {
        let f = char_poly(a)?;
        if !f.is_square_free() {
            return Err(Error::NotSemisimple);
        }
        let d = a.rows();
        let af = a.to_f64();
        let roots = complex_roots(&f);
        if roots.len() != d {
            return Err(Error::Verification("root count differs from dimension".into()));
        }
        let mut p = DMatrix::<f64>::zeros(d, d);
        let mut blocks = Vec::new();
        let mut col = 0;
        for z in roots.iter().filter(|z| z.im >= 0.0) {
            let regime = classify(z.norm());
            if z.im == 0.0 {
                let v = real_null_vector(&af, z.re);
                p.set_column(col, &v);
                blocks.push(Block { regime, start: col, size: 1, eigenvalue: *z, modulus: z.norm() });
                col += 1;
            } else {
                let v = complex_null_vector(&af, *z);
                let re = v.map(|c| c.re);
                let im = v.map(|c| c.im);
                p.set_column(col, &re);
                p.set_column(col + 1, &im);
                blocks.push(Block { regime, start: col, size: 2, eigenvalue: *z, modulus: z.norm() });
                col += 2;
            }
        }
        if col != d {
            return Err(Error::Verification("eigenbasis construction lost columns".into()));
        }
        let p_inv = p
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Verification("eigenbasis is singular".into()))?;

        let mut block_diag = DMatrix::<f64>::zeros(d, d);
        for b in &blocks {
            let (s, z) = (b.start, b.eigenvalue);
            if b.size == 1 {
                block_diag[(s, s)] = z.re;
            } else {
                // A(x + iy) = (ax - by) + i(bx + ay) for lambda = a + ib.
                block_diag[(s, s)] = z.re;
                block_diag[(s, s + 1)] = z.im;
                block_diag[(s + 1, s)] = -z.im;
                block_diag[(s + 1, s + 1)] = z.re;
            }
        }

        let proj = [Regime::Stable, Regime::Central, Regime::Unstable].map(|r| {
            let mut mask = DMatrix::<f64>::zeros(d, d);
            for b in blocks.iter().filter(|b| b.regime == r) {
                for k in 0..b.size {
                    mask[(b.start + k, b.start + k)] = 1.0;
                }
            }
            &p * mask * &p_inv
        });

        let gap = blocks
            .iter()
            .filter(|b| b.regime != Regime::Central)
            .map(|b| b.modulus.max(1.0 / b.modulus))
            .fold(f64::INFINITY, f64::min);
        let rho = if gap.is_finite() { gap * (1.0 - tol) } else { f64::INFINITY };

        // |(P c)_i| <= sum_b |P_{i,b}|_2 |c_b|_2, so kappa makes |v|_inf <= |v|_a.
        let kappa = (0..d)
            .map(|i| {
                blocks
                    .iter()
                    .map(|b| (0..b.size).map(|k| p[(i, b.start + k)].powi(2)).sum::<f64>().sqrt())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let inv_norm = blocks
            .iter()
            .map(|b| {
                (0..b.size)
                    .map(|k| p_inv.row(b.start + k).iter().map(|x| x.abs()).sum::<f64>().powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        let cond = kappa * inv_norm;

        Ok(Self {
            dim: d,
            blocks,
            p,
            p_inv,
            block_diag,
            proj,
            rho,
            kappa,
            cond,
            tol,
            char_poly: f,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Bound on `|v|_a / |v|_inf`.
    pub fn cond(&self) -> f64 {
        self.cond
    }

    pub fn char_poly(&self) -> &Polynomial {
        &self.char_poly
    }

    /// Real eigenbasis `P` (columns), with `A = P D P^{-1}`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.p_inv
    }

    /// Real block-diagonal `D = P^{-1} A P`.
    pub fn block_diagonal(&self) -> &DMatrix<f64> {
        &self.block_diag
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        let count = |r| self.blocks.iter().filter(|b| b.regime == r).map(|b| b.size).sum();
        (count(Regime::Stable), count(Regime::Central), count(Regime::Unstable))
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.dims().1 == 0
    }

    pub fn projection(&self, r: Regime) -> &DMatrix<f64> {
        match r {
            Regime::Stable => &self.proj[0],
            Regime::Central => &self.proj[1],
            Regime::Unstable => &self.proj[2],
        }
    }

    /// Columns of `P` belonging to the given regime.
    pub fn regime_basis(&self, r: Regime) -> DMatrix<f64> {
        let cols: Vec<usize> = self
            .blocks
            .iter()
            .filter(|b| b.regime == r)
            .flat_map(|b| b.start..b.start + b.size)
            .collect();
        DMatrix::from_fn(self.dim, cols.len(), |i, j| self.p[(i, cols[j])])
    }

    /// Eigen-coordinates `P^{-1} v`.
    pub fn coordinates(&self, v: &[f64]) -> DVector<f64> {
        &self.p_inv * DVector::from_column_slice(v)
    }

    /// Euclidean norm of each block of eigen-coordinates.
    pub fn block_norms(&self, c: &DVector<f64>) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| (0..b.size).map(|k| c[b.start + k].powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// Adapted norm of a vector of `R^d`.
    pub fn adapted_norm(&self, v: &[f64]) -> f64 {
        let c = self.coordinates(v);
        self.kappa * self.block_norms(&c).into_iter().fold(0.0, f64::max)
    }

    /// Quadratic form `G = kappa P^{-1}` with `|v|_a <= |G v|_2 <= sqrt(#blocks) |v|_a`.
    pub fn gram_root(&self) -> DMatrix<f64> {
        &self.p_inv * self.kappa
    }

    /// Adapted quotient norm: `min_k |w + k|_a` over integer translates.
    pub fn quotient_norm(&self, w: &[f64]) -> f64 {
        let reduced: Vec<f64> = w.iter().map(|x| x - x.round()).collect();
        let r0 = self.adapted_norm(&reduced);
        // Any other translate has sup-norm >= 1/2, hence adapted norm >= 1/2.
        if r0 <= 0.5 {
            return r0;
        }
        let mut best = r0;
        let center: Vec<f64> = reduced.iter().map(|x| -x).collect();
        let radius = r0 * (self.blocks.len() as f64).sqrt();
        let res = enumerate_ellipsoid(&self.gram_root(), &center, radius, 1_000_000, |k| {
            let v: Vec<f64> = reduced.iter().zip(k).map(|(x, &k)| x + k as f64).collect();
            best = best.min(self.adapted_norm(&v));
        });
        debug_assert!(res.is_ok());
        best
    }

    /// Reference implementation over the box `|k|_inf <= radius`.
    pub fn quotient_norm_box(&self, w: &[f64], radius: i64) -> f64 {
        let d = self.dim;
        let mut k = vec![-radius; d];
        let mut best = f64::INFINITY;
        loop {
            let v: Vec<f64> = w.iter().zip(&k).map(|(x, &k)| x + k as f64).collect();
            best = best.min(self.adapted_norm(&v));
            let mut i = 0;
            loop {
                if i == d {
                    return best;
                }
                k[i] += 1;
                if k[i] <= radius {
                    break;
                }
                k[i] = -radius;
                i += 1;
            }
        }
    }

    /// The spec's translate search radius `ceil(cond) + 1`.
    pub fn search_radius(&self) -> i64 {
        self.cond.ceil() as i64 + 1
    }
}

fn classify(modulus: f64) -> Regime {
    if (modulus - 1.0).abs() < UNIMODULAR_THRESHOLD {
        Regime::Central
    } else if modulus < 1.0 {
        Regime::Stable
    } else {
        Regime::Unstable
    }
}

fn real_null_vector(a: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let d = a.nrows();
    let m = a - DMatrix::<f64>::identity(d, d) * lambda;
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let k = argmin(svd.singular_values.as_slice());
    let v = vt.row(k).transpose();
    normalize_sign(v)
}

fn complex_null_vector(a: &DMatrix<f64>, lambda: Complex64) -> DVector<Complex64> {
    let d = a.nrows();
    let m = a.map(|x| Complex64::new(x, 0.0)) - DMatrix::<Complex64>::identity(d, d) * lambda;
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^H");
    let k = argmin(svd.singular_values.as_slice());
    let v: DVector<Complex64> = vt.row(k).adjoint();
    // Rotate so the largest component is real and positive: makes the real
    // basis deterministic.
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let phase = v[imax] / v[imax].norm();
    v.map(|z| z / phase)
}

fn normalize_sign(v: DVector<f64>) -> DVector<f64> {
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
    if v[imax] < 0.0 {
        -v
    } else {
        v
    }
}

fn argmin(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> Splitting {
        Splitting::new(&RatMatrix::parse("2,1;1,1").unwrap(), 1e-9).unwrap()
    }

    #[test]
    fn cat_map_dimensions_and_rho() {
        let s = cat();
        assert_eq!(s.dims(), (1, 0, 1));
        assert!((s.rho() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn projections_sum_to_identity() {
        let s = Splitting::new(&RatMatrix::parse("0,0,0,-1;1,0,0,1;0,1,0,1;0,0,1,1").unwrap(), 1e-9)
            .unwrap();
        assert_eq!(s.dims(), (1, 2, 1));
        let sum = s.projection(Regime::Stable) + s.projection(Regime::Central) + s.projection(Regime::Unstable);
        assert!((sum - DMatrix::<f64>::identity(4, 4)).norm() < 1e-10);
    }

    #[test]
    fn block_diagonal_conjugates_back() {
        let a = RatMatrix::parse("0,0,0,-1;1,0,0,1;0,1,0,1;0,0,1,1").unwrap();
        let s = Splitting::new(&a, 1e-9).unwrap();
        let back = s.basis() * s.block_diagonal() * s.basis_inverse();
        assert!((back - a.to_f64()).norm() < 1e-10);
    }

    #[test]
    fn adapted_norm_dominates_sup_norm() {
        let s = cat();
        for v in [[1.0, 0.0], [0.3, -0.7], [0.5, 0.5]] {
            let sup = v.iter().fold(0.0f64, |m, x: &f64| m.max(x.abs()));
            assert!(s.adapted_norm(&v) >= sup - 1e-12);
            assert!(s.adapted_norm(&v) <= s.cond() * sup + 1e-12);
        }
    }

    #[test]
    fn quotient_norm_matches_box_search() {
        let s = cat();
        for w in [[0.5, 0.0], [0.31, -0.44], [0.49, 0.49], [0.0, 0.0]] {
            let fast = s.quotient_norm(&w);
            let slow = s.quotient_norm_box(&w, 3);
            assert!((fast - slow).abs() < 1e-12, "{w:?}: {fast} vs {slow}");
        }
    }

    #[test]
    fn jordan_block_is_not_semisimple() {
        assert!(matches!(
            Splitting::new(&RatMatrix::parse("1,1;0,1").unwrap(), 1e-9),
            Err(Error::NotSemisimple)
        ));
    }
}
