use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{smith::smith_int, IntMatrix, RatMatrix, Rational};

/// Connected closed subgroup `Y = B R^k / (B R^k ∩ Z^d)` of `T^d`, given by a
/// primitive integer basis `B` (`d x k`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subtorus {
    basis: IntMatrix,
    /// Unimodular `W` whose first `k` columns are `B`.
    completion: IntMatrix,
    /// `W^{-1}` (integral).
    completion_inv: IntMatrix,
}

impl Subtorus {
    /// Fails with `NotPrimitive` unless `B` extends to a basis of `Z^d`.
    pub fn new(basis: IntMatrix) -> Result<Self> {
        let (d, k) = (basis.rows(), basis.cols());
        if k > d {
            return Err(Error::NotPrimitive);
        }
        if k == 0 {
            return Ok(Self::trivial(d));
        }
        let s = smith_int(&basis);
        if s.invariant_factors().iter().any(|f| !f.is_one()) {
            return Err(Error::NotPrimitive);
        }
        // U B V = [I; 0] gives B = U^{-1}[I; 0] V^{-1}, so
        // W = U^{-1} diag(V^{-1}, I) starts with the columns of B.
        let (u_inv, du) = s.u.inverse_scaled()?;
        let (v_inv, dv) = s.v.inverse_scaled()?;
        let u_inv = scale_unit(u_inv, &du);
        let v_inv = scale_unit(v_inv, &dv);
        let mut block = IntMatrix::identity(d);
        for i in 0..k {
            for j in 0..k {
                block.set(i, j, v_inv.get(i, j).clone());
            }
        }
        let completion = u_inv.mul(&block);
        debug_assert!((0..k).all(|j| completion.col(j) == basis.col(j)));
        let (ci, dc) = completion.inverse_scaled()?;
        let completion_inv = scale_unit(ci, &dc);
        Ok(Self { basis, completion, completion_inv })
    }

    /// Parses a basis in the matrix text format (columns are basis vectors).
    pub fn parse(s: &str) -> Result<Self> {
        Self::new(RatMatrix::parse(s)?.to_int()?)
    }

    /// `{0}` in `T^d`.
    pub fn trivial(d: usize) -> Self {
        Self {
            basis: IntMatrix::zeros(d, 0),
            completion: IntMatrix::identity(d),
            completion_inv: IntMatrix::identity(d),
        }
    }

    /// All of `T^d`.
    pub fn full(d: usize) -> Self {
        Self {
            basis: IntMatrix::identity(d),
            completion: IntMatrix::identity(d),
            completion_inv: IntMatrix::identity(d),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn completion(&self) -> &IntMatrix {
        &self.completion
    }

    pub fn completion_inverse(&self) -> &IntMatrix {
        &self.completion_inv
    }

    /// Coordinates `W^{-1} v` split as (`Y` part, complementary part).
    pub fn split_coordinates(&self, v: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
        let c = self.completion_inv.to_rat().mul_vec(v);
        let k = self.dim();
        (c[..k].to_vec(), c[k..].to_vec())
    }

    /// True iff `v` (a real lift) lies in `Y + Z^d`.
    pub fn contains_mod_lattice(&self, v: &[Rational]) -> bool {
        self.split_coordinates(v).1.iter().all(Rational::is_integer)
    }

    /// `B c` for real coordinates `c`.
    pub fn embed(&self, c: &[Rational]) -> Vec<Rational> {
        let b = self.basis.to_rat();
        if self.dim() == 0 {
            return vec![Rational::zero(); self.ambient_dim()];
        }
        b.mul_vec(c)
    }

    /// Integer `M` with `A B = B M`; `NotInvariant` if `A B` leaves the span.
    pub fn restriction(&self, a: &IntMatrix) -> Result<IntMatrix> {
        if a.rows() != self.ambient_dim() || !a.is_square() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: a.rows() });
        }
        let k = self.dim();
        let img = self.completion_inv.mul(&a.mul(&self.basis));
        let d = self.ambient_dim();
        if (k..d).any(|i| (0..k).any(|j| !img.get(i, j).is_zero())) {
            return Err(Error::NotInvariant);
        }
        let mut m = IntMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m.set(i, j, img.get(i, j).clone());
            }
        }
        Ok(m)
    }

    /// Matrix induced on `T^d / Y` in the complementary coordinates of `W`.
    pub fn quotient_action(&self, a: &IntMatrix) -> Result<IntMatrix> {
        self.restriction(a)?;
        let k = self.dim();
        let d = self.ambient_dim();
        let conj = self.completion_inv.mul(&a.mul(&self.completion));
        let mut m = IntMatrix::zeros(d - k, d - k);
        for i in k..d {
            for j in k..d {
                m.set(i - k, j - k, conj.get(i, j).clone());
            }
        }
        Ok(m)
    }
}

/// `R / det` for a unimodular inverse (`det = ±1`).
fn scale_unit(r: IntMatrix, det: &BigInt) -> IntMatrix {
    if det.is_one() {
        r
    } else {
        r.neg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn completion_is_unimodular_and_starts_with_basis() {
        let y = Subtorus::new(IntMatrix::from_i64_rows(&[vec![1, 0], vec![2, 1], vec![3, 5]])).unwrap();
        assert!(y.completion().is_unimodular());
        assert_eq!(y.completion().col(0), y.basis().col(0));
        assert_eq!(y.completion().col(1), y.basis().col(1));
        assert_eq!(y.completion().mul(y.completion_inverse()), IntMatrix::identity(3));
    }

    #[test]
    fn non_primitive_basis_rejected() {
        assert!(matches!(
            Subtorus::new(IntMatrix::from_i64_rows(&[vec![2], vec![0]])),
            Err(Error::NotPrimitive)
        ));
    }

    #[test]
    fn restriction_examples() {
        let a = IntMatrix::from_i64_rows(&[vec![1, 0, 0], vec![1, 2, 1], vec![0, 1, 1]]);
        let y = Subtorus::parse("0,0;1,0;0,1").unwrap();
        assert_eq!(y.restriction(&a).unwrap(), IntMatrix::from_i64_rows(&[vec![2, 1], vec![1, 1]]));
        assert_eq!(y.quotient_action(&a).unwrap(), IntMatrix::from_i64_rows(&[vec![1]]));
        assert_eq!(Subtorus::full(3).restriction(&a).unwrap(), a);
        let cat = IntMatrix::from_i64_rows(&[vec![2, 1], vec![1, 1]]);
        assert!(matches!(
            Subtorus::parse("1;0").unwrap().restriction(&cat),
            Err(Error::NotInvariant)
        ));
    }

    #[test]
    fn coset_membership() {
        let y = Subtorus::parse("0;1").unwrap();
        assert!(y.contains_mod_lattice(&[rat(3, 1), rat(1, 3)]));
        assert!(!y.contains_mod_lattice(&[rat(1, 2), rat(0, 1)]));
    }
}
