use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::symbolic::{Param, SymbolicPoint};
use crate::error::{Error, Result};
use crate::exact::{centered_frac, fmt_rational, parse_rational, IntMatrix, RatMatrix, Rational};
use crate::torus::Subtorus;

/// Bits used for the numerical consistency checks.
const CHECK_BITS: u64 = 200;

/// Rational affine subtorus `v0 + span(v_1..v_m)` with a target point
/// `v0 + sum t_i v_i` in it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosureData {
    #[serde(serialize_with = "ser_rationals")]
    pub v0: Vec<Rational>,
    #[serde(serialize_with = "ser_vectors")]
    pub spans: Vec<Vec<BigInt>>,
    pub targets: Vec<Param>,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_rational))
}

fn ser_vectors<S: serde::Serializer>(v: &[Vec<BigInt>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")))
}

impl ClosureData {
    pub fn new(v0: Vec<Rational>, spans: Vec<Vec<BigInt>>, targets: Vec<Param>) -> Result<Self> {
        if spans.len() != targets.len() {
            return Err(Error::Precondition(format!(
                "{} span vectors but {} targets",
                spans.len(),
                targets.len()
            )));
        }
        if let Some(v) = spans.iter().find(|v| v.len() != v0.len()) {
            return Err(Error::DimensionMismatch { expected: v0.len(), got: v.len() });
        }
        Ok(Self { v0, spans, targets })
    }

    /// Rational coordinates go into `v0`; each irrational coordinate `j`
    /// contributes the span vector `e_j` with target `a_j`.
    pub fn coordinatewise(a: &SymbolicPoint) -> Self {
        let d = a.dim();
        let mut v0 = vec![Rational::zero(); d];
        let mut spans = Vec::new();
        let mut targets = Vec::new();
        for (j, c) in a.coords.iter().enumerate() {
            match c {
                Param::Rational(r) => v0[j] = r.clone(),
                _ => {
                    let mut e = vec![BigInt::zero(); d];
                    e[j] = BigInt::one();
                    spans.push(e);
                    targets.push(c.clone());
                }
            }
        }
        Self { v0, spans, targets }
    }

    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    /// `v0 + sum t_i v_i` with every `t_i` replaced by a dyadic within
    /// `2^{-bits}`.
    pub fn target_approx(&self, bits: u64) -> Vec<Rational> {
        let mut out = self.v0.clone();
        for (v, t) in self.spans.iter().zip(&self.targets) {
            let t = t.approx(bits);
            for (o, c) in out.iter_mut().zip(v) {
                *o += &t * Rational::from_integer(c.clone());
            }
        }
        out
    }

    /// Largest absolute span entry, used to bound approximation errors.
    fn span_norm(&self) -> BigInt {
        let rows = (0..self.dim()).map(|i| self.spans.iter().map(|v| v[i].abs()).sum::<BigInt>());
        rows.max().unwrap_or_else(BigInt::zero)
    }
}

/// Support `a + H, U a + H, ..., U^{m-1} a + H` of an ergodic measure of a
/// unipotent automorphism; the measure is Haar on each component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupportDescriptor {
    pub a: SymbolicPoint,
    #[serde(rename = "H", serialize_with = "crate::serde_util::display_str")]
    pub h: SubtorusBasis,
    pub m: u64,
    pub closure: ClosureData,
}

/// Display wrapper for a subtorus basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtorusBasis(pub Subtorus);

impl fmt::Display for SubtorusBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.dim() == 0 {
            write!(f, "trivial")
        } else {
            write!(f, "{}", self.0.basis())
        }
    }
}

impl SupportDescriptor {
    /// Descriptor with coordinatewise closure data.
    pub fn new(a: SymbolicPoint, h: Subtorus, m: u64) -> Result<Self> {
        let closure = ClosureData::coordinatewise(&a);
        Self::with_closure(a, h, m, closure)
    }

    pub fn with_closure(a: SymbolicPoint, h: Subtorus, m: u64, closure: ClosureData) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("component count m must be >= 1".into()));
        }
        if h.ambient_dim() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: h.ambient_dim() });
        }
        if closure.dim() != a.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: closure.dim() });
        }
        let out = Self { a, h: SubtorusBasis(h), m, closure };
        out.check_closure()?;
        Ok(out)
    }

    /// Parses `"a = <point>; H = <basis>; m = <int>"`, where the basis uses the
    /// matrix format (columns span `H`) or is `trivial`/`full`. Optional keys
    /// `v0 = <point>`, `V = <matrix>` (columns are span vectors) and
    /// `t = <params>` give explicit closure data.
    pub fn parse(s: &str) -> Result<Self> {
        let mut fields: Vec<(String, String)> = Vec::new();
        for piece in s.split(';') {
            match piece.split_once('=') {
                Some((k, v)) => fields.push((k.trim().to_string(), v.trim().to_string())),
                None => match fields.last_mut() {
                    Some((_, v)) => {
                        v.push(';');
                        v.push_str(piece.trim());
                    }
                    None => return Err(Error::Parse(format!("bad descriptor '{s}'"))),
                },
            }
        }
        let get = |k: &str| fields.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        if let Some((k, _)) = fields.iter().find(|(k, _)| !["a", "H", "m", "v0", "V", "t"].contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown descriptor key '{k}'")));
        }
        let a = SymbolicPoint::parse(get("a").ok_or_else(|| Error::Parse("descriptor needs 'a'".into()))?)?;
        let d = a.dim();
        let h = match get("H").unwrap_or("trivial") {
            "trivial" | "0" => Subtorus::trivial(d),
            "full" => Subtorus::full(d),
            b => Subtorus::parse(b)?,
        };
        let m: u64 = match get("m") {
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad component count '{v}'")))?,
            None => 1,
        };
        match (get("v0"), get("V"), get("t")) {
            (None, None, None) => Self::new(a, h, m),
            (Some(v0), v, t) => {
                let v0 = v0.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
                let (spans, targets) = match (v, t) {
                    (Some(v), Some(t)) => {
                        let mat = RatMatrix::parse(v)?.to_int()?;
                        let spans = (0..mat.cols()).map(|j| mat.col(j)).collect();
                        let targets = t.split(',').map(Param::parse).collect::<Result<Vec<_>>>()?;
                        (spans, targets)
                    }
                    (None, None) => (Vec::new(), Vec::new()),
                    _ => return Err(Error::Parse("closure data needs both 'V' and 't'".into())),
                };
                Self::with_closure(a, h, m, ClosureData::new(v0, spans, targets)?)
            }
            _ => Err(Error::Parse("closure data needs 'v0'".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn subgroup(&self) -> &Subtorus {
        &self.h.0
    }

    /// True when the support is a finite set.
    pub fn is_finite(&self) -> bool {
        self.subgroup().dim() == 0
    }

    /// The closure target agrees with `a` modulo 1.
    fn check_closure(&self) -> Result<()> {
        let t = self.closure.target_approx(CHECK_BITS);
        let a = self.a.approx(CHECK_BITS).coords();
        let tol = tolerance(&self.closure.span_norm() + BigInt::one());
        for (x, y) in t.iter().zip(&a) {
            if centered_frac(&(x - y)).abs() > tol {
                return Err(Error::Precondition("closure data does not reach the base point a".into()));
            }
        }
        Ok(())
    }

    /// `U^m (a + H) = a + H`, and `U^i a + H` differs from `a + H` for
    /// `0 < i < m`. The translation part is checked on a `2^{-200}`
    /// approximation of `a`, so the test is numerical for irrational `a`.
    pub fn check_consistency(&self, u: &IntMatrix) -> Result<()> {
        let d = self.dim();
        if u.rows() != d || !u.is_square() {
            return Err(Error::DimensionMismatch { expected: d, got: u.rows() });
        }
        let h = self.subgroup();
        let um = u.pow(self.m);
        h.restriction(&um)?;
        let a = self.a.approx(CHECK_BITS).coords();
        let mut power = IntMatrix::identity(d);
        for i in 1..=self.m {
            power = power.mul(u);
            let moved = power.sub(&IntMatrix::identity(d)).to_rat().mul_vec(&a);
            let (_, rest) = h.split_coordinates(&moved);
            let tol = tolerance(power.inf_norm() * h.completion_inverse().inf_norm() + BigInt::one());
            let on_coset = rest.iter().all(|c| centered_frac(c).abs() <= tol);
            if i == self.m && !on_coset {
                return Err(Error::Precondition(format!("U^{} does not preserve a + H", self.m)));
            }
            if i < self.m && on_coset {
                return Err(Error::Precondition(format!("U^{i} already preserves a + H, so m < {}", self.m)));
            }
        }
        Ok(())
    }
}

fn tolerance(scale: BigInt) -> Rational {
    Rational::new(scale, BigInt::one() << (CHECK_BITS - 8))
}

impl fmt::Display for SupportDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a = {}; H = {}; m = {}", self.a, self.h, self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn jordan2() -> IntMatrix {
        IntMatrix::from_i64_rows(&[vec![1, 1], vec![0, 1]])
    }

    #[test]
    fn parses_fiber_descriptor() {
        let d = SupportDescriptor::parse("a = 0, phi; H = 1;0; m = 1").unwrap();
        assert_eq!(d.subgroup().dim(), 1);
        assert_eq!(d.closure.v0, vec![rat(0, 1), rat(0, 1)]);
        assert_eq!(d.closure.spans, vec![vec![BigInt::zero(), BigInt::one()]]);
        d.check_consistency(&jordan2()).unwrap();
        let again = SupportDescriptor::parse(&d.to_string()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn explicit_closure() {
        let d = SupportDescriptor::parse("a = 1/2, sqrt(2)/2; H = trivial; m = 1; v0 = 1/2,0; V = 0;1; t = sqrt(2)/2").unwrap();
        assert_eq!(d.closure.targets.len(), 1);
        assert!(SupportDescriptor::parse("a = 1/2, sqrt(2)/2; v0 = 1/2,0; V = 0;1; t = sqrt(3)").is_err());
    }

    #[test]
    fn consistency_detects_component_count() {
        let u = IntMatrix::from_i64_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![0, 0, 1]]);
        let h = "1;0;0";
        let good = SupportDescriptor::parse(&format!("a = 0, phi, 1/2; H = {h}; m = 2")).unwrap();
        good.check_consistency(&u).unwrap();
        let wrong = SupportDescriptor::parse(&format!("a = 0, phi, 1/2; H = {h}; m = 1")).unwrap();
        assert!(wrong.check_consistency(&u).is_err());
        let too_big = SupportDescriptor::parse(&format!("a = 0, phi, 1/2; H = {h}; m = 4")).unwrap();
        assert!(too_big.check_consistency(&u).is_err());
        // H not invariant under U.
        let bad = SupportDescriptor::parse("a = 0, 0, 0; H = 0;1;0; m = 1").unwrap();
        assert!(matches!(bad.check_consistency(&u), Err(Error::NotInvariant)));
    }
}
