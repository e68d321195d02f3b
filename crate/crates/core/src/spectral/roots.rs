use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::exact::{to_f64, Polynomial};

/// All complex roots of `f` (with multiplicity), from companion-matrix
/// eigenvalues polished by Newton's method on `f`.
///
/// Roots are returned sorted by modulus, then by argument.
pub fn complex_roots(f: &Polynomial) -> Vec<Complex64> {
    let d = f.degree();
    if d == 0 || f.is_zero() {
        return Vec::new();
    }
    let lc = to_f64(&f.leading());
    let mut comp = DMatrix::<f64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -to_f64(&f.coeff(i)) / lc;
    }
    let df = f.derivative();
    let mut roots: Vec<Complex64> = comp
        .complex_eigenvalues()
        .iter()
        .map(|&z| polish(f, &df, z))
        .collect();
    // Conjugate-symmetrize so pairs compare exactly.
    for z in &mut roots {
        if z.im.abs() < 1e-12 * (1.0 + z.norm()) {
            z.im = 0.0;
        }
    }
    roots.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap()
            .then(a.arg().partial_cmp(&b.arg()).unwrap())
    });
    roots
}

fn polish(f: &Polynomial, df: &Polynomial, mut z: Complex64) -> Complex64 {
    for _ in 0..50 {
        let fz = f.eval_complex(z);
        let dz = df.eval_complex(z);
        if dz.norm() == 0.0 {
            break;
        }
        let step = fz / dz;
        let next = z - step;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        z = next;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_roots() {
        let r = complex_roots(&Polynomial::from_i64(&[1, -3, 1]));
        let phi2 = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((r[0].re - 1.0 / phi2).abs() < 1e-14);
        assert!((r[1].re - phi2).abs() < 1e-14);
        assert_eq!(r[1].im, 0.0);
    }

    #[test]
    fn unimodular_pair_of_salem_quartic() {
        let r = complex_roots(&Polynomial::from_i64(&[1, -1, -1, -1, 1]));
        let c = (1.0 - 13f64.sqrt()) / 4.0;
        let unimodular: Vec<_> = r.iter().filter(|z| (z.norm() - 1.0).abs() < 1e-9).collect();
        assert_eq!(unimodular.len(), 2);
        for z in unimodular {
            assert!((z.re - c).abs() < 1e-12);
        }
    }
}
