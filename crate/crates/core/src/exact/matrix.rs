use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{fmt_rational, lcm_denominators, parse_rational, IntMatrix, Polynomial, Rational};
use crate::error::{Error, Result};

/// Dense rational matrix, row-major, at least 1x1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Parse(format!(
                "bad matrix shape {rows}x{cols} with {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Parse("ragged matrix rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Builds from `i64` rows. Panics on ragged or empty input.
    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        IntMatrix::from_i64_rows(rows).to_rat()
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    /// Parses the text format `"2,1;1,1"` (rows by `;`, entries by `,`).
    pub fn parse(s: &str) -> Result<Self> {
        let rows = s
            .split(';')
            .map(|row| row.split(',').map(parse_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_cols(cols: &[Vec<Rational>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r.max(1), c.max(1));
        if r == 0 || c == 0 || cols.iter().any(|col| col.len() != r) {
            return Err(Error::Parse("bad column list".into()));
        }
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        Ok(m)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Matrix product. Panics on shape mismatch.
    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| {
                let mut acc = Rational::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &Rational) -> RatMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * k).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> RatMatrix {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|a| a.is_integer())
    }

    /// Least common multiple of all entry denominators.
    pub fn common_denominator(&self) -> BigInt {
        lcm_denominators(&self.data)
    }

    /// `D * self` as an integer matrix, with `D` the common denominator.
    pub fn scaled_to_int(&self) -> (IntMatrix, BigInt) {
        let d = self.common_denominator();
        let data = self.data.iter().map(|a| (a * &d).to_integer()).collect();
        (
            IntMatrix::new(self.rows, self.cols, data).expect("shape already valid"),
            d,
        )
    }

    pub fn to_int(&self) -> Result<IntMatrix> {
        if !self.is_integral() {
            return Err(Error::NotIntegral);
        }
        Ok(self.scaled_to_int().0)
    }

    pub fn determinant(&self) -> Result<Rational> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let (n, d) = self.scaled_to_int();
        let det = n.det()?;
        Ok(Rational::new(det, num_traits::pow(d, self.rows)))
    }

    pub fn inverse(&self) -> Result<RatMatrix> {
        exact_inverse(self)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| super::to_f64(self.get(i, j)))
    }
}

/// Exact inverse via fraction-free Gauss-Jordan on the integer-scaled matrix.
pub fn exact_inverse(m: &RatMatrix) -> Result<RatMatrix> {
    if !m.is_square() {
        return Err(Error::NonSquare { rows: m.rows, cols: m.cols });
    }
    let (n, d) = m.scaled_to_int();
    let (r, p) = n.inverse_scaled()?;
    // m = n / d, so m^{-1} = d * n^{-1} = d * r / p.
    let data = r
        .entries()
        .iter()
        .map(|a| Rational::new(a * &d, p.clone()))
        .collect();
    RatMatrix::new(m.rows, m.cols, data)
}

/// Characteristic polynomial `det(xI - M)`, monic of degree `d`.
///
/// Scales `M` to an integer matrix `N = D M`, runs Bareiss elimination on
/// `xI - N` over `Z[x]` (leading principal minors are monic, so every division
/// is exact and no pivoting is needed), then rescales `x`.
pub fn char_poly(m: &RatMatrix) -> Result<Polynomial> {
    if !m.is_square() {
        return Err(Error::NonSquare { rows: m.rows, cols: m.cols });
    }
    let d = m.rows;
    let (n, scale) = m.scaled_to_int();
    type P = Vec<BigInt>;
    let mut a: Vec<P> = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let c = -n.get(i, j).clone();
            a.push(if i == j { vec![c, BigInt::one()] } else { vec![c] });
        }
    }
    let mut prev: P = vec![BigInt::one()];
    for k in 0..d.saturating_sub(1) {
        for i in k + 1..d {
            for j in k + 1..d {
                let num = zpoly_sub(
                    &zpoly_mul(&a[i * d + j], &a[k * d + k]),
                    &zpoly_mul(&a[i * d + k], &a[k * d + j]),
                );
                a[i * d + j] = zpoly_div_monic(&num, &prev);
            }
        }
        prev = a[k * d + k].clone();
    }
    let f = &a[d * d - 1];
    // det(xI - M) = D^{-d} f_N(D x)
    let coeffs = (0..=d)
        .map(|i| {
            let c = f.get(i).cloned().unwrap_or_default();
            Rational::new(c, num_traits::pow(scale.clone(), d - i))
        })
        .collect();
    Ok(Polynomial::new(coeffs))
}

fn zpoly_trim(mut p: Vec<BigInt>) -> Vec<BigInt> {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn zpoly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    zpoly_trim(out)
}

fn zpoly_sub(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default())
        .collect();
    zpoly_trim(out)
}

/// Exact division by a monic divisor; panics in debug builds if not exact.
fn zpoly_div_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dd = den.len() - 1;
    debug_assert!(den[dd].is_one());
    let mut rem = num.to_vec();
    if rem.len() <= dd {
        debug_assert!(rem.iter().all(Zero::is_zero));
        return vec![BigInt::zero()];
    }
    let mut q = vec![BigInt::zero(); rem.len() - dd];
    for k in (0..q.len()).rev() {
        let c = rem[k + dd].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            rem[k + j] -= &c * dj;
        }
        q[k] = c;
    }
    debug_assert!(rem.iter().all(Zero::is_zero), "non-exact polynomial division");
    zpoly_trim(q)
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ";")?;
            }
            let row: Vec<String> = self.row(i).iter().map(fmt_rational).collect();
            write!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    #[test]
    fn text_format_round_trip() {
        let m = RatMatrix::parse("2,1/2; -1 ,3").unwrap();
        assert_eq!(m.get(0, 1), &rat(1, 2));
        assert_eq!(m.to_string(), "2,1/2;-1,3");
        assert!(RatMatrix::parse("1,2;3").is_err());
    }

    #[test]
    fn char_poly_examples() {
        let cat = RatMatrix::parse("2,1;1,1").unwrap();
        assert_eq!(char_poly(&cat).unwrap(), Polynomial::from_i64(&[1, -3, 1]));
        let id = RatMatrix::identity(2);
        assert_eq!(char_poly(&id).unwrap(), Polynomial::from_i64(&[1, -2, 1]));
        let m = RatMatrix::parse("0,-1/2;1,3/2").unwrap();
        let expect = Polynomial::new(vec![rat(1, 2), rat(-3, 2), int(1)]);
        assert_eq!(char_poly(&m).unwrap(), expect);
        assert!(char_poly(&RatMatrix::parse("1,2").unwrap()).is_err());
    }

    #[test]
    fn inverse_examples() {
        let m = RatMatrix::parse("1,1;1,0").unwrap();
        assert_eq!(exact_inverse(&m).unwrap(), RatMatrix::parse("0,1;1,-1").unwrap());
        assert_eq!(exact_inverse(&RatMatrix::identity(3)).unwrap(), RatMatrix::identity(3));
        assert!(matches!(
            exact_inverse(&RatMatrix::parse("1,1;1,1").unwrap()),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn determinant_with_fractions() {
        let m = RatMatrix::parse("1/2,1/3;1/4,1/5").unwrap();
        assert_eq!(m.determinant().unwrap(), rat(1, 10) - rat(1, 12));
    }
}
