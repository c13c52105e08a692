//! Bit-packed computational bases.
//!
//! Site 0 is stored in the most significant used bit of the word, so the
//! lexicographic order of bit strings coincides with the integer order of the
//! packed words. A set bit means the atom is in the Rydberg state.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest chain a `Configuration` can hold.
pub const MAX_SITES: usize = 64;
/// Default size caps for enumerated bases.
pub const CAP_CONSTRAINED: usize = 28;
pub const CAP_FULL: usize = 20;

/// One classical bit string: bit i set ⇔ atom i in |r⟩.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    word: u64,
    n: u8,
}

impl Configuration {
    pub fn from_word(word: u64, n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > MAX_SITES {
            return Err(Error::Invalid(format!("configuration length {n_atoms} outside 1..={MAX_SITES}")));
        }
        if n_atoms < 64 && word >> n_atoms != 0 {
            return Err(Error::Invalid(format!("word {word:#x} has bits beyond {n_atoms} sites")));
        }
        Ok(Self { word, n: n_atoms as u8 })
    }

    pub(crate) fn from_word_unchecked(word: u64, n_atoms: usize) -> Self {
        Self { word, n: n_atoms as u8 }
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let word = bits.iter().fold(0u64, |w, &b| (w << 1) | b as u64);
        Self::from_word(word, bits.len())
    }

    pub fn all_ground(n_atoms: usize) -> Self {
        Self { word: 0, n: n_atoms as u8 }
    }

    /// Z₂ crystal |r g r g …⟩ with atom 0 excited.
    pub fn crystal(n_atoms: usize) -> Self {
        let bits: Vec<bool> = (0..n_atoms).map(|i| i % 2 == 0).collect();
        Self::from_bits(&bits).expect("length checked by caller")
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        bit(self.word, self.n as usize, i)
    }

    pub fn with(&self, i: usize, excited: bool) -> Self {
        let mask = 1u64 << (self.n as usize - 1 - i);
        let word = if excited { self.word | mask } else { self.word & !mask };
        Self { word, n: self.n }
    }

    pub fn excitations(&self) -> u32 {
        self.word.count_ones()
    }

    /// True when no two neighbouring atoms are both excited.
    pub fn is_blockade_free(&self) -> bool {
        blockade_free(self.word)
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }
}

#[inline]
pub(crate) fn bit(word: u64, n: usize, i: usize) -> bool {
    (word >> (n - 1 - i)) & 1 == 1
}

#[inline]
pub(crate) fn blockade_free(word: u64) -> bool {
    word & (word >> 1) == 0
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Invalid(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

/// Ordered basis over the full or the blockade-constrained space.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    n_atoms: usize,
    constrained: bool,
    states: Vec<u64>,
}

impl BasisSet {
    /// Enumerates the basis with the default size caps.
    pub fn enumerate(n_atoms: usize, constrained: bool) -> Result<Self> {
        let cap = if constrained { CAP_CONSTRAINED } else { CAP_FULL };
        Self::enumerate_with_cap(n_atoms, constrained, cap)
    }

    pub fn enumerate_with_cap(n_atoms: usize, constrained: bool, cap: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Invalid("basis needs at least one atom".into()));
        }
        let cap = cap.min(if constrained { 44 } else { 30 });
        if n_atoms > cap {
            return Err(Error::Resource {
                what: format!("{} basis size", if constrained { "constrained" } else { "full" }),
                requested: n_atoms,
                cap,
            });
        }
        let states = if constrained {
            let mut out = Vec::with_capacity(fibonacci(n_atoms + 2) as usize);
            push_constrained(&mut out, 0, n_atoms, false);
            out
        } else {
            (0..1u64 << n_atoms).collect()
        };
        Ok(Self { n_atoms, constrained, states })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Packed words in ascending order.
    pub fn words(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, k: usize) -> Configuration {
        Configuration::from_word_unchecked(self.states[k], self.n_atoms)
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.states.iter().map(move |&w| Configuration::from_word_unchecked(w, self.n_atoms))
    }

    /// Ordinal of `config`, or `None` if it is not part of this basis.
    pub fn index_of(&self, config: &Configuration) -> Result<Option<usize>> {
        if config.len() != self.n_atoms {
            return Err(Error::Shape(format!(
                "configuration has {} sites, basis has {}",
                config.len(),
                self.n_atoms
            )));
        }
        Ok(self.index_of_word(config.word()))
    }

    #[inline]
    pub(crate) fn index_of_word(&self, word: u64) -> Option<usize> {
        if self.constrained {
            self.states.binary_search(&word).ok()
        } else {
            Some(word as usize)
        }
    }
}

// depth-first in lexicographic order: 0 branch before 1 branch
fn push_constrained(out: &mut Vec<u64>, prefix: u64, remaining: usize, last_excited: bool) {
    if remaining == 0 {
        out.push(prefix);
        return;
    }
    push_constrained(out, prefix << 1, remaining - 1, false);
    if !last_excited {
        push_constrained(out, (prefix << 1) | 1, remaining - 1, true);
    }
}

/// Fib(1) = Fib(2) = 1.
pub fn fibonacci(k: usize) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..k {
        let next = a + b;
        a = b;
        b = next;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_constrained() {
        let b = BasisSet::enumerate(2, true).unwrap();
        let s: Vec<String> = b.iter().map(|c| c.to_string()).collect();
        assert_eq!(s, ["00", "01", "10"]);
    }

    #[test]
    fn full_three_sites() {
        let b = BasisSet::enumerate(3, false).unwrap();
        assert_eq!(b.len(), 8);
        assert_eq!(b.state(5).to_string(), "101");
    }

    #[test]
    fn sizes_follow_fibonacci() {
        for n in 1..=22 {
            let b = BasisSet::enumerate(n, true).unwrap();
            assert_eq!(b.len() as u64, fibonacci(n + 2), "N={n}");
        }
        assert_eq!(fibonacci(27), 196_418);
    }

    #[test]
    fn caps_are_enforced() {
        match BasisSet::enumerate(21, false) {
            Err(Error::Resource { cap, requested, .. }) => assert_eq!((cap, requested), (20, 21)),
            other => panic!("expected resource error, got {other:?}"),
        }
        assert!(matches!(BasisSet::enumerate(29, true), Err(Error::Resource { cap: 28, .. })));
    }

    #[test]
    fn index_lookup() {
        let b = BasisSet::enumerate(10, true).unwrap();
        assert_eq!(b.index_of(&b.state(0)).unwrap(), Some(0));
        for k in 0..b.len() {
            assert_eq!(b.index_of(&b.state(k)).unwrap(), Some(k));
        }
        let all: Configuration = "1111111111".parse().unwrap();
        assert_eq!(b.index_of(&all).unwrap(), None);
        let short: Configuration = "101".parse().unwrap();
        assert!(matches!(b.index_of(&short), Err(Error::Shape(_))));
    }

    #[test]
    fn matches_brute_force_filter() {
        for n in 1..=16 {
            let brute: Vec<u64> = (0..1u64 << n).filter(|&w| blockade_free(w)).collect();
            assert_eq!(BasisSet::enumerate(n, true).unwrap().words(), &brute[..]);
        }
    }

    #[test]
    fn configuration_helpers() {
        let c = Configuration::crystal(5);
        assert_eq!(c.to_string(), "10101");
        assert_eq!(c.excitations(), 3);
        assert!(c.is_blockade_free());
        assert!(!c.with(1, true).is_blockade_free());
        assert_eq!(Configuration::all_ground(4).to_string(), "0000");
        assert!("10x".parse::<Configuration>().is_err());
        let long = Configuration::crystal(51);
        assert_eq!(long.len(), 51);
        assert!(long.get(50));
    }
}
