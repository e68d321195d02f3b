use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::word::Word;
use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::measure::{Distance, MetricFamily};

/// Largest `alphabet^L` table kept densely.
const MAX_TABLE: usize = 1 << 24;

/// Cylinder frequencies of a shift-invariant measure for all words of length
/// `1..=L`, as integer counts over a common sample size.
///
/// Words of each length are indexed lexicographically, the first symbol most
/// significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderMeasure {
    alphabet: usize,
    max_len: usize,
    sample: u64,
    counts: Vec<Vec<u64>>,
}

impl CylinderMeasure {
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Number of windows counted, the common denominator.
    pub fn sample(&self) -> u64 {
        self.sample
    }

    /// `"shift-k"`.
    pub fn space(&self) -> String {
        format!("shift-{}", self.alphabet)
    }

    /// Count of windows equal to the word with the given index and length.
    pub fn count(&self, len: usize, index: usize) -> u64 {
        self.counts[len - 1][index]
    }

    pub fn counts(&self, len: usize) -> &[u64] {
        &self.counts[len - 1]
    }

    /// Exact frequency of `w`; `None` for words longer than `L` or outside
    /// the alphabet.
    pub fn freq(&self, w: &[u8]) -> Option<Rational> {
        if w.is_empty() || w.len() > self.max_len || w.iter().any(|&s| s as usize >= self.alphabet) {
            return None;
        }
        let idx = word_index(w, self.alphabet);
        Some(Rational::new(self.counts[w.len() - 1][idx].into(), self.sample.into()))
    }

    /// `freq(w) = sum_s freq(ws) = sum_s freq(sw)` for every `|w| < L`, and
    /// the length-1 frequencies sum to 1.
    pub fn is_consistent(&self) -> bool {
        let a = self.alphabet;
        if self.counts[0].iter().sum::<u64>() != self.sample {
            return false;
        }
        (1..self.max_len).all(|len| {
            let (short, long) = (&self.counts[len - 1], &self.counts[len]);
            let stride = a.pow(len as u32);
            (0..short.len()).all(|i| {
                let right: u64 = (0..a).map(|s| long[i * a + s]).sum();
                let left: u64 = (0..a).map(|s| long[s * stride + i]).sum();
                right == short[i] && left == short[i]
            })
        })
    }

    /// The same measure over `{0, 1, a}`.
    pub fn widen(&self) -> Self {
        if self.alphabet == 3 {
            return self.clone();
        }
        let counts = (1..=self.max_len)
            .map(|len| {
                let mut wide = vec![0; 3usize.pow(len as u32)];
                for (i, &c) in self.counts[len - 1].iter().enumerate() {
                    wide[reindex(i, len, self.alphabet, 3)] = c;
                }
                wide
            })
            .collect();
        Self { alphabet: 3, max_len: self.max_len, sample: self.sample, counts }
    }

    pub fn family(&self) -> MetricFamily {
        MetricFamily::shift(self.alphabet, self.max_len)
    }
}

impl Serialize for CylinderMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut freqs = Vec::new();
        for len in 1..=self.max_len {
            for (i, &c) in self.counts[len - 1].iter().enumerate() {
                if c > 0 {
                    let w = Word::finite(index_word(i, len, self.alphabet), self.alphabet).expect("valid symbols");
                    freqs.push((w.to_string(), format!("{c}/{}", self.sample)));
                }
            }
        }
        let mut st = s.serialize_struct("CylinderMeasure", 4)?;
        st.serialize_field("space", &self.space())?;
        st.serialize_field("max_len", &self.max_len)?;
        st.serialize_field("sample", &self.sample)?;
        st.serialize_field("frequencies", &freqs)?;
        st.end()
    }
}

/// Lexicographic index of `w` among words of its length.
pub fn word_index(w: &[u8], alphabet: usize) -> usize {
    w.iter().fold(0, |acc, &s| acc * alphabet + s as usize)
}

/// Inverse of [`word_index`].
pub fn index_word(mut index: usize, len: usize, alphabet: usize) -> Vec<u8> {
    let mut w = vec![0u8; len];
    for slot in w.iter_mut().rev() {
        *slot = (index % alphabet) as u8;
        index /= alphabet;
    }
    w
}

fn reindex(index: usize, len: usize, from: usize, to: usize) -> usize {
    word_index(&index_word(index, len, from), to)
}

/// Sliding-window frequencies of all words of length `1..=L`, reading `w`
/// cyclically: over one period for periodic words, and around the sample
/// for finite words so that the consistency equations hold exactly.
pub fn cylinder_empirical(w: &Word, max_len: usize) -> Result<CylinderMeasure> {
    if max_len == 0 {
        return Err(Error::Precondition("L must be at least 1".into()));
    }
    if w.is_empty() {
        return Err(Error::Precondition("word must be non-empty".into()));
    }
    let a = w.alphabet();
    if a.checked_pow(max_len as u32).is_none_or(|t| t > MAX_TABLE) {
        return Err(Error::Budget(format!("{a}^{max_len} cylinders is too many")));
    }
    let n = w.len();
    let s = w.symbols();
    let mut counts: Vec<Vec<u64>> = (1..=max_len).map(|l| vec![0; a.pow(l as u32)]).collect();
    for start in 0..n {
        let mut idx = 0;
        for (l, table) in counts.iter_mut().enumerate() {
            idx = idx * a + s[(start + l) % n] as usize;
            table[idx] += 1;
        }
    }
    Ok(CylinderMeasure { alphabet: a, max_len, sample: n as u64, counts })
}

/// `sum_n 2^{-(n+1)} |mu[w_n] - nu[w_n]|` over cylinders ordered by length
/// and then lexicographically. Terms whose weight underflows `f64` are
/// dropped; they are below `2^{-1074}` in total.
pub fn shift_distance(mu: &CylinderMeasure, nu: &CylinderMeasure) -> Result<Distance> {
    if mu.alphabet != nu.alphabet || mu.max_len != nu.max_len {
        return Err(Error::SpaceMismatch(format!(
            "{} with L = {} vs {} with L = {}",
            mu.space(),
            mu.max_len,
            nu.space(),
            nu.max_len
        )));
    }
    let (n1, n2) = (mu.sample as i128, nu.sample as i128);
    let scale = (n1 * n2) as f64;
    let mut w = 0.25;
    let mut sum = 0.0;
    'outer: for (a, b) in mu.counts.iter().zip(&nu.counts) {
        for (&x, &y) in a.iter().zip(b) {
            if w == 0.0 {
                break 'outer;
            }
            let diff = (x as i128 * n2 - y as i128 * n1).unsigned_abs() as f64;
            sum += w * (diff / scale);
            w *= 0.5;
        }
    }
    Ok(Distance { value: sum, certified_error: mu.family().certified_error() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::subshift::{thue_morse, xp_periodic_point};

    #[test]
    fn trivial_measures() {
        let zeros = cylinder_empirical(&Word::parse("0000", true).unwrap(), 2).unwrap();
        assert_eq!(zeros.freq(&[0, 0]), Some(rat(1, 1)));
        let oa = cylinder_empirical(&xp_periodic_point(2, 1).unwrap(), 1).unwrap();
        assert_eq!(oa.freq(&[0]), Some(rat(1, 2)));
        assert_eq!(oa.freq(&[2]), Some(rat(1, 2)));
        assert_eq!(oa.freq(&[1]), Some(rat(0, 1)));
        assert!(oa.is_consistent());
    }

    #[test]
    fn thue_morse_balance() {
        let tm = cylinder_empirical(&thue_morse(1 << 16), 6).unwrap();
        assert!(tm.is_consistent());
        assert_eq!(tm.freq(&[0]), Some(rat(1, 2)));
        // Cube-free: the factors 000 and 111 never occur.
        assert_eq!(tm.freq(&[0, 0, 0]), Some(rat(0, 1)));
        assert_eq!(tm.freq(&[1, 1, 1]), Some(rat(0, 1)));
    }

    #[test]
    fn widen_keeps_frequencies() {
        let tm = cylinder_empirical(&thue_morse(256), 4).unwrap();
        let wide = tm.widen();
        assert!(wide.is_consistent());
        for len in 1..=4 {
            for i in 0..2usize.pow(len as u32) {
                let w = index_word(i, len, 2);
                assert_eq!(tm.freq(&w), wide.freq(&w));
            }
        }
        assert_eq!(wide.freq(&[2, 0]), Some(rat(0, 1)));
    }

    #[test]
    fn distance_matches_direct_summation() {
        let tm = cylinder_empirical(&thue_morse(1 << 12).widen(), 3).unwrap();
        let oa = cylinder_empirical(&xp_periodic_point(2, 1).unwrap(), 3).unwrap();
        let d = shift_distance(&tm, &oa).unwrap().value;
        assert_eq!(d, shift_distance(&oa, &tm).unwrap().value);
        assert_eq!(shift_distance(&tm, &tm).unwrap().value, 0.0);
        // Independent route: enumerate words recursively and read frequencies.
        let mut words: Vec<Vec<u8>> = Vec::new();
        let mut layer = vec![Vec::new()];
        for _ in 0..3 {
            layer = layer.iter().flat_map(|w: &Vec<u8>| (0..3u8).map(move |s| [w.clone(), vec![s]].concat())).collect();
            words.extend(layer.iter().cloned());
        }
        let mut direct = 0.0;
        for (n, w) in words.iter().enumerate() {
            let diff = tm.freq(w).unwrap() - oa.freq(w).unwrap();
            direct += 2f64.powi(-(n as i32 + 2)) * crate::exact::to_f64(&diff).abs();
        }
        assert!((d - direct).abs() < 1e-15, "{d} vs {direct}");
    }

    #[test]
    fn mismatch_is_rejected() {
        let a = cylinder_empirical(&thue_morse(64), 3).unwrap();
        let b = cylinder_empirical(&thue_morse(64), 4).unwrap();
        assert!(matches!(shift_distance(&a, &b), Err(Error::SpaceMismatch(_))));
        assert!(matches!(shift_distance(&a, &a.widen()), Err(Error::SpaceMismatch(_))));
    }
}
