use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Marker symbol of the `X_p` subshifts, stored as `2`.
pub const MARKER: u8 = 2;

/// Finite word, or one exact period of a periodic sequence, over `{0, 1}`
/// or `{0, 1, a}` (`a` stored as [`MARKER`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    symbols: Vec<u8>,
    alphabet: usize,
    periodic: bool,
}

impl Word {
    pub fn finite(symbols: Vec<u8>, alphabet: usize) -> Result<Self> {
        Self::build(symbols, alphabet, false)
    }

    /// The periodic sequence repeating `period`.
    pub fn periodic(period: Vec<u8>, alphabet: usize) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Precondition("period must be non-empty".into()));
        }
        Self::build(period, alphabet, true)
    }

    fn build(symbols: Vec<u8>, alphabet: usize, periodic: bool) -> Result<Self> {
        if !(alphabet == 2 || alphabet == 3) {
            return Err(Error::Precondition(format!("alphabet size must be 2 or 3, got {alphabet}")));
        }
        if let Some(s) = symbols.iter().find(|&&s| s as usize >= alphabet) {
            return Err(Error::Parse(format!("symbol {s} outside an alphabet of size {alphabet}")));
        }
        Ok(Self { symbols, alphabet, periodic })
    }

    /// Parses `0`, `1` and `a`; the alphabet is `{0, 1, a}` when `a` occurs.
    pub fn parse(s: &str, periodic: bool) -> Result<Self> {
        let symbols = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                'a' => Ok(MARKER),
                _ => Err(Error::Parse(format!("unexpected symbol {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        let alphabet = if symbols.contains(&MARKER) { 3 } else { 2 };
        if periodic {
            Self::periodic(symbols, alphabet)
        } else {
            Self::finite(symbols, alphabet)
        }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Same symbols over the larger alphabet `{0, 1, a}`.
    pub fn widen(&self) -> Self {
        Self { alphabet: 3, ..self.clone() }
    }

    /// Symbol at position `i`, read cyclically for periodic words.
    pub fn at(&self, i: usize) -> u8 {
        if self.periodic {
            self.symbols[i % self.symbols.len()]
        } else {
            self.symbols[i]
        }
    }

    /// Least period of a periodic word: the least divisor `t` of the stored
    /// length with `w[i] = w[i + t]` cyclically.
    pub fn least_period(&self) -> Option<usize> {
        if !self.periodic {
            return None;
        }
        let n = self.symbols.len();
        (1..=n).filter(|t| n % t == 0).find(|&t| (0..n).all(|i| self.symbols[i] == self.symbols[(i + t) % n]))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.symbols {
            f.write_str(match s {
                0 => "0",
                1 => "1",
                _ => "a",
            })?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// First `n` symbols of the Thue-Morse sequence: `u[i]` is the parity of the
/// number of ones in the binary expansion of `i`.
pub fn thue_morse(n: usize) -> Word {
    let symbols = (0..n).map(|i| (i.count_ones() & 1) as u8).collect();
    Word { symbols, alphabet: 2, periodic: false }
}

/// Image under the substitution `0 -> 01`, `1 -> 10`.
pub fn tm_substitute(w: &Word) -> Word {
    let symbols = w.symbols.iter().flat_map(|&s| [s, 1 - s]).collect();
    Word { symbols, alphabet: 2, periodic: w.periodic }
}

/// Periodic point of `X_p` with period `p^n`: `u[0, p^n - 1)` followed by `a`.
pub fn xp_periodic_point(p: u64, n: u32) -> Result<Word> {
    if p < 2 || n == 0 {
        return Err(Error::Precondition(format!("need p >= 2 and n >= 1, got p = {p}, n = {n}")));
    }
    let m = p
        .checked_pow(n)
        .filter(|&m| m <= 1 << 26)
        .ok_or_else(|| Error::Budget(format!("period {p}^{n} is too long")))? as usize;
    let mut symbols = thue_morse(m - 1).symbols;
    symbols.push(MARKER);
    Ok(Word { symbols, alphabet: 3, periodic: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thue_morse_prefix() {
        assert_eq!(thue_morse(8).to_string(), "01101001");
        for n in [1, 5, 64, 1000] {
            assert_eq!(tm_substitute(&thue_morse(n)), thue_morse(2 * n));
        }
    }

    #[test]
    fn xp_words() {
        assert_eq!(xp_periodic_point(2, 2).unwrap().to_string(), "011a");
        assert_eq!(xp_periodic_point(2, 1).unwrap().to_string(), "0a");
        assert_eq!(xp_periodic_point(3, 1).unwrap().to_string(), "01a");
        assert!(xp_periodic_point(1, 3).is_err());
        assert!(xp_periodic_point(2, 0).is_err());
    }

    #[test]
    fn parse_and_periods() {
        let w = Word::parse("0a0a", true).unwrap();
        assert_eq!(w.alphabet(), 3);
        assert_eq!(w.least_period(), Some(2));
        assert_eq!(w.at(5), MARKER);
        assert!(Word::parse("012", false).is_err());
        assert_eq!(Word::parse("0110", false).unwrap().least_period(), None);
    }
}
