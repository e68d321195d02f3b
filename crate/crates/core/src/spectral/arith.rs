//! Irreducibility heuristics and cyclotomic factor detection.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::newton::is_prime;
use crate::exact::{Polynomial, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Irreducibility {
    Irreducible,
    Reducible,
    Unknown,
}

/// Rational-root test (conclusive up to degree 3), then a search for a prime
/// modulo which `f` stays irreducible of the same degree.
pub fn irreducibility(f: &Polynomial) -> Irreducibility {
    let d = f.degree();
    if d <= 1 {
        return Irreducibility::Irreducible;
    }
    if has_rational_root(f) == Some(true) {
        return Irreducibility::Reducible;
    }
    if d <= 3 && has_rational_root(f) == Some(false) {
        return Irreducibility::Irreducible;
    }
    let ints = f.primitive_integer();
    let mut p = 2u64;
    let mut tried = 0;
    while tried < 60 {
        p += 1;
        if !is_prime(p) {
            continue;
        }
        tried += 1;
        let pb = BigInt::from(p);
        if ints[d].is_multiple_of(&pb) {
            continue;
        }
        let fp: Vec<u64> = ints.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect();
        if irreducible_mod_p(&fp, p) {
            return Irreducibility::Irreducible;
        }
    }
    Irreducibility::Unknown
}

/// `Some(true)` if a rational root exists, `None` if the coefficients are too
/// large to enumerate candidates.
pub fn has_rational_root(f: &Polynomial) -> Option<bool> {
    let ints = f.primitive_integer();
    if ints[0].is_zero() {
        return Some(true);
    }
    let c0 = ints[0].abs().to_u64().filter(|&v| v <= 1_000_000_000_000)?;
    let cd = ints.last().unwrap().abs().to_u64().filter(|&v| v <= 1_000_000_000_000)?;
    for a in divisors(c0) {
        for b in divisors(cd) {
            for s in [1i64, -1] {
                let r = Rational::new(BigInt::from(s) * BigInt::from(a), BigInt::from(b));
                if f.eval(&r).is_zero() {
                    return Some(true);
                }
            }
        }
    }
    Some(false)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 1u64;
    while k * k <= n {
        if n % k == 0 {
            out.push(k);
            if k * k != n {
                out.push(n / k);
            }
        }
        k += 1;
    }
    out
}

/// Euler's totient.
pub fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Cyclotomic polynomial `Phi_n` (exact division of `x^n - 1`).
pub fn cyclotomic(n: u64) -> Polynomial {
    let mut c = vec![Rational::zero(); n as usize + 1];
    c[0] = crate::exact::int(-1);
    c[n as usize] = crate::exact::int(1);
    let mut p = Polynomial::new(c);
    for k in 1..n {
        if n % k == 0 {
            p = p.div_rem(&cyclotomic(k)).0;
        }
    }
    p
}

/// Smallest `n` such that `f` shares a root with `Phi_n`, if any.
pub fn root_of_unity_order(f: &Polynomial) -> Option<u64> {
    let d = f.degree() as u64;
    // phi(n) >= sqrt(n / 2), so phi(n) <= d forces n <= 2 d^2.
    (1..=2 * d * d + 2)
        .filter(|&n| totient(n) <= d)
        .find(|&n| f.gcd(&cyclotomic(n)).degree() > 0)
}

// Polynomials over F_p, constant-first, trimmed.

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let (mut b, mut e) = (a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    r
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let dm = m.len() - 1;
    let inv = inv_mod(m[dm], p);
    while a.len() > dm {
        let k = a.len() - 1;
        let q = mulmod(a[k], inv, p);
        for i in 0..=dm {
            let sub = mulmod(q, m[i], p);
            a[k - dm + i] = (a[k - dm + i] + p - sub) % p;
        }
        a = trim(a);
    }
    a
}

fn poly_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
        }
    }
    poly_rem(&out, m, p)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// `x^(p^k) mod m` by repeated `p`-th powering.
fn frobenius_power(m: &[u64], p: u64, k: usize) -> Vec<u64> {
    let mut x = poly_rem(&[0, 1], m, p);
    for _ in 0..k {
        let mut result = vec![1u64];
        let mut base = x.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = poly_mulmod(&result, &base, m, p);
            }
            base = poly_mulmod(&base, &base, m, p);
            e >>= 1;
        }
        x = result;
    }
    x
}

fn minus_x(a: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    if a.len() < 2 {
        a.resize(2, 0);
    }
    a[1] = (a[1] + p - 1) % p;
    trim(a)
}

/// Rabin's test: `f` (leading coefficient nonzero mod `p`) is irreducible
/// over `F_p` iff `f | x^(p^n) - x` and `gcd(x^(p^(n/q)) - x, f) = 1` for
/// every prime `q | n`.
pub(crate) fn irreducible_mod_p(f: &[u64], p: u64) -> bool {
    let f = trim(f.to_vec());
    let n = f.len() - 1;
    if n == 0 {
        return false;
    }
    if !minus_x(&frobenius_power(&f, p, n), p).is_empty() {
        return false;
    }
    for q in (2..=n).filter(|&q| n % q == 0 && is_prime(q as u64)) {
        let g = poly_gcd(&f, &minus_x(&frobenius_power(&f, p, n / q), p), p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cyclotomics() {
        assert_eq!(cyclotomic(1), Polynomial::from_i64(&[-1, 1]));
        assert_eq!(cyclotomic(6), Polynomial::from_i64(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), Polynomial::from_i64(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn detects_roots_of_unity() {
        assert_eq!(root_of_unity_order(&Polynomial::from_i64(&[1, -1, 1])), Some(6));
        assert_eq!(root_of_unity_order(&Polynomial::from_i64(&[1, -3, 1])), None);
        assert_eq!(root_of_unity_order(&Polynomial::from_i64(&[1, -1, -1, -1, 1])), None);
        // (x^2 + 1)(x^2 - 3x + 1)
        let f = Polynomial::from_i64(&[1, 0, 1]).mul(&Polynomial::from_i64(&[1, -3, 1]));
        assert_eq!(root_of_unity_order(&f), Some(4));
    }

    #[test]
    fn irreducibility_classification() {
        assert_eq!(irreducibility(&Polynomial::from_i64(&[1, -3, 1])), Irreducibility::Irreducible);
        assert_eq!(irreducibility(&Polynomial::from_i64(&[-1, -3, 2])), Irreducibility::Irreducible);
        assert_eq!(irreducibility(&Polynomial::from_i64(&[2, -3, 1])), Irreducibility::Reducible);
        assert_eq!(
            irreducibility(&Polynomial::from_i64(&[1, -1, -1, -1, 1])),
            Irreducibility::Irreducible
        );
        // x^4 + 1 is reducible modulo every prime: heuristic cannot decide.
        assert_eq!(irreducibility(&Polynomial::from_i64(&[1, 0, 0, 0, 1])), Irreducibility::Unknown);
    }

    #[test]
    fn rabin_test_over_f2() {
        assert!(irreducible_mod_p(&[1, 1, 1], 2));
        assert!(!irreducible_mod_p(&[1, 0, 1], 2));
        assert!(irreducible_mod_p(&[1, 1, 0, 1], 2));
    }

    #[test]
    fn totients() {
        let want = [1, 1, 2, 2, 4, 2, 6, 4, 6, 4];
        for (n, &w) in (1..=10).zip(&want) {
            assert_eq!(totient(n), w);
        }
    }
}
