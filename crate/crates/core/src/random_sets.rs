//! Algebra of random subsets of the positive integers and extraction maps.
//!
//! An infinite random subset A of {1, 2, ...} with i.i.d. Bernoulli(p)
//! membership has law nu_p. Its extraction map psi_A enumerates the
//! elements in increasing order: psi_A(1) < psi_A(2) < ... Composition
//! satisfies psi_I . psi_J = psi_R with R = psi_I(J), and R has law
//! nu_{pq} when I ~ nu_p and J ~ nu_q are independent.
//!
//! Infinite objects are represented by explicit finite prefixes. Every
//! operation accounts for the largest source index it consults and fails
//! with `InsufficientPrefix` instead of ever truncating silently.
//! Positions are 1-based throughout.

use std::fmt;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Letter of the two-letter alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    A,
    B,
}

impl Letter {
    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::B => 'b',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'a' => Ok(Letter::A),
            'b' => Ok(Letter::B),
            other => Err(Error::InvalidDistribution(format!(
                "alphabet is {{a,b}}, got {other:?}"
            ))),
        }
    }
}

/// Finite truncation of an infinite word over {a, b}; letter i of the word
/// is `letters[i-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPrefix {
    letters: Vec<Letter>,
}

impl WordPrefix {
    pub fn from_letters(letters: Vec<Letter>) -> Self {
        WordPrefix { letters }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let letters = s.chars().map(Letter::from_char).collect::<Result<_>>()?;
        Ok(WordPrefix { letters })
    }

    /// i.i.d. uniform letters.
    pub fn sample_uniform(rng: &mut impl Rng, n: u64) -> Self {
        let letters = (0..n)
            .map(|_| if rng.random::<bool>() { Letter::B } else { Letter::A })
            .collect();
        WordPrefix { letters }
    }

    pub fn len(&self) -> u64 {
        self.letters.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Letter at 1-based position `pos`.
    pub fn get(&self, pos: u64) -> Result<Letter> {
        if pos == 0 || pos > self.len() {
            return Err(Error::InsufficientPrefix {
                context: "word letter",
                demanded: pos,
                available: self.len(),
            });
        }
        Ok(self.letters[(pos - 1) as usize])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn truncated(&self, k: u64) -> Result<WordPrefix> {
        if k > self.len() {
            return Err(Error::InsufficientPrefix {
                context: "word truncation",
                demanded: k,
                available: self.len(),
            });
        }
        Ok(WordPrefix {
            letters: self.letters[..k as usize].to_vec(),
        })
    }
}

impl fmt::Display for WordPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl Serialize for WordPrefix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WordPrefix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        WordPrefix::parse(&s).map_err(D::Error::custom)
    }
}

/// Finite truncation of a subset of {1, 2, ...}: indicator bits for
/// positions 1..=len, packed 64 per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetPrefix {
    words: Vec<u64>,
    len: u64,
}

impl SubsetPrefix {
    fn empty(len: u64) -> Self {
        SubsetPrefix {
            words: vec![0; len.div_ceil(64) as usize],
            len,
        }
    }

    /// i.i.d. Bernoulli(p) membership bits for positions 1..=n.
    pub fn sample(rng: &mut impl Rng, p: f64, n: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!(
                "Bernoulli parameter must lie in [0,1], got {p}"
            )));
        }
        let mut out = SubsetPrefix::empty(n);
        if p == 0.5 {
            // Bulk path for the ubiquitous nu_{1/2}: one u64 per 64 bits.
            for w in out.words.iter_mut() {
                *w = rng.random::<u64>();
            }
            out.mask_tail();
        } else {
            for pos in 1..=n {
                if rng.random::<f64>() < p {
                    out.set(pos);
                }
            }
        }
        Ok(out)
    }

    fn mask_tail(&mut self) {
        let tail = (self.len % 64) as u32;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    fn set(&mut self, pos: u64) {
        debug_assert!(pos >= 1 && pos <= self.len);
        self.words[((pos - 1) / 64) as usize] |= 1u64 << ((pos - 1) % 64);
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = SubsetPrefix::empty(bits.len() as u64);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                out.set(i as u64 + 1);
            }
        }
        out
    }

    /// Subset with the given elements, as a prefix of length `len`.
    pub fn from_elements(elements: &[u64], len: u64) -> Result<Self> {
        let mut out = SubsetPrefix::empty(len);
        let mut prev = 0u64;
        for &e in elements {
            if e <= prev {
                return Err(Error::InvalidDistribution(format!(
                    "element list must be strictly increasing, got {e} after {prev}"
                )));
            }
            if e > len {
                return Err(Error::InsufficientPrefix {
                    context: "subset element",
                    demanded: e,
                    available: len,
                });
            }
            out.set(e);
            prev = e;
        }
        Ok(out)
    }

    /// Parse a 0/1 indicator string, e.g. "010011".
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidDistribution(format!(
                    "indicator string must be 0/1, got {other:?}"
                ))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(SubsetPrefix::from_bools(&bits))
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Membership of 1-based position `pos`.
    pub fn contains(&self, pos: u64) -> Result<bool> {
        if pos == 0 || pos > self.len {
            return Err(Error::InsufficientPrefix {
                context: "subset membership",
                demanded: pos,
                available: self.len,
            });
        }
        Ok(self.words[((pos - 1) / 64) as usize] >> ((pos - 1) % 64) & 1 == 1)
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of set bits among positions 1..=pos (pos = 0 allowed).
    pub fn rank(&self, pos: u64) -> Result<u64> {
        if pos > self.len {
            return Err(Error::InsufficientPrefix {
                context: "subset rank",
                demanded: pos,
                available: self.len,
            });
        }
        let full = (pos / 64) as usize;
        let mut r: u64 = self.words[..full].iter().map(|w| w.count_ones() as u64).sum();
        let tail = pos % 64;
        if tail != 0 {
            r += (self.words[full] & ((1u64 << tail) - 1)).count_ones() as u64;
        }
        Ok(r)
    }

    /// Number of clear bits among positions 1..=pos.
    pub fn rank_zeros(&self, pos: u64) -> Result<u64> {
        Ok(pos - self.rank(pos)?)
    }

    /// Position of the k-th set bit (k >= 1): psi of this subset at k.
    pub fn select(&self, k: u64) -> Result<u64> {
        if k == 0 {
            return Err(Error::InvalidDistribution("select index must be >= 1".into()));
        }
        let mut remaining = k;
        for (wi, &w) in self.words.iter().enumerate() {
            let c = w.count_ones() as u64;
            if remaining <= c {
                let mut w = w;
                for _ in 1..remaining {
                    w &= w - 1; // clear lowest set bit
                }
                return Ok(wi as u64 * 64 + w.trailing_zeros() as u64 + 1);
            }
            remaining -= c;
        }
        Err(Error::InsufficientPrefix {
            context: "subset select",
            demanded: k,
            available: self.count_ones(),
        })
    }

    /// Position of the k-th clear bit: psi of the complement at k.
    pub fn select_zero(&self, k: u64) -> Result<u64> {
        self.complement().select(k)
    }

    /// Complement within the prefix.
    pub fn complement(&self) -> Self {
        let mut out = SubsetPrefix {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.mask_tail();
        out
    }

    /// All elements within the prefix, increasing.
    pub fn element_list(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.count_ones() as usize);
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi as u64 * 64 + w.trailing_zeros() as u64 + 1);
                w &= w - 1;
            }
        }
        out
    }
}

impl fmt::Display for SubsetPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pos in 1..=self.len {
            let b = self.words[((pos - 1) / 64) as usize] >> ((pos - 1) % 64) & 1;
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl Serialize for SubsetPrefix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SubsetPrefix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SubsetPrefix::parse(&s).map_err(D::Error::custom)
    }
}

/// First `k` extraction positions of a subset, with the demand made on the
/// source recorded for auditing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractionView {
    /// psi(1..k), strictly increasing.
    pub positions: Vec<u64>,
    /// Largest source index consulted (= last position).
    pub demanded: u64,
}

/// First `k` elements of `i` in increasing order: psi_I(1..k).
pub fn elements(i: &SubsetPrefix, k: u64) -> Result<ExtractionView> {
    let all = i.element_list();
    if (all.len() as u64) < k {
        return Err(Error::InsufficientPrefix {
            context: "elements",
            demanded: k,
            available: all.len() as u64,
        });
    }
    let positions: Vec<u64> = all[..k as usize].to_vec();
    let demanded = positions.last().copied().unwrap_or(0);
    Ok(ExtractionView { positions, demanded })
}

/// R = psi_I(J), the subset satisfying psi_I . psi_J = psi_R.
///
/// The output prefix covers exactly the positions whose membership the two
/// input prefixes determine: everything below psi_I(|J prefix| + 1), capped
/// by I's prefix length.
pub fn compose_subsets(i: &SubsetPrefix, j: &SubsetPrefix) -> Result<SubsetPrefix> {
    let j_elements = j.element_list();
    let ones = i.count_ones();
    if let Some(&j_max) = j_elements.last() {
        if j_max > ones {
            return Err(Error::InsufficientPrefix {
                context: "compose_subsets",
                demanded: j_max,
                available: ones,
            });
        }
    }
    let out_len = if ones >= j.len() + 1 {
        i.select(j.len() + 1)? - 1
    } else {
        i.len()
    };
    let mut out = SubsetPrefix::empty(out_len);
    for &je in &j_elements {
        let pos = i.select(je)?;
        debug_assert!(pos <= out_len);
        out.set(pos);
    }
    Ok(out)
}

/// First `k` letters of x . psi_I.
pub fn extract_word(x: &WordPrefix, i: &SubsetPrefix, k: u64) -> Result<WordPrefix> {
    let view = elements(i, k)?;
    if view.demanded > x.len() {
        return Err(Error::InsufficientPrefix {
            context: "extract_word",
            demanded: view.demanded,
            available: x.len(),
        });
    }
    let letters = view
        .positions
        .iter()
        .map(|&pos| x.get(pos))
        .collect::<Result<_>>()?;
    Ok(WordPrefix::from_letters(letters))
}

/// Longest prefix of x . psi_I that the two prefixes determine.
pub fn extract_word_avail(x: &WordPrefix, i: &SubsetPrefix) -> WordPrefix {
    let covered = x.len().min(i.len());
    let k = i.rank(covered).expect("covered <= len");
    extract_word(x, i, k).expect("demand within covered prefix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn degenerate_sampling_laws() {
        let mut rng = stream_rng(0, 0);
        let zeros = SubsetPrefix::sample(&mut rng, 0.0, 8).unwrap();
        assert_eq!(zeros.to_string(), "00000000");
        let ones = SubsetPrefix::sample(&mut rng, 1.0, 8).unwrap();
        assert_eq!(ones.to_string(), "11111111");
        assert!(SubsetPrefix::sample(&mut rng, 1.5, 8).is_err());
    }

    #[test]
    fn half_density_within_clt_band() {
        let mut rng = stream_rng(0, 1);
        let n = 100_000u64;
        let s = SubsetPrefix::sample(&mut rng, 0.5, n).unwrap();
        let density = s.count_ones() as f64 / n as f64;
        // 3 sigma band: 0.5 +/- 3*sqrt(0.25/1e5) = 0.5 +/- 0.0047
        assert!((density - 0.5).abs() < 0.0047, "density {density}");
    }

    #[test]
    fn elements_matches_hand_evaluations() {
        let i = SubsetPrefix::parse("010011").unwrap();
        assert_eq!(elements(&i, 3).unwrap().positions, vec![2, 5, 6]);
        assert_eq!(elements(&i, 3).unwrap().demanded, 6);
        let i = SubsetPrefix::parse("111111").unwrap();
        assert_eq!(elements(&i, 4).unwrap().positions, vec![1, 2, 3, 4]);
        let i = SubsetPrefix::parse("101010101010").unwrap();
        assert_eq!(elements(&i, 5).unwrap().positions, vec![1, 3, 5, 7, 9]);
        match elements(&i, 7) {
            Err(Error::InsufficientPrefix { demanded: 7, available: 6, .. }) => {}
            other => panic!("expected InsufficientPrefix, got {other:?}"),
        }
    }

    #[test]
    fn rank_select_are_inverse() {
        let mut rng = stream_rng(0, 2);
        let s = SubsetPrefix::sample(&mut rng, 0.3, 1000).unwrap();
        let elems = s.element_list();
        for (k, &pos) in elems.iter().enumerate() {
            assert_eq!(s.select(k as u64 + 1).unwrap(), pos);
            assert_eq!(s.rank(pos).unwrap(), k as u64 + 1);
            assert!(s.contains(pos).unwrap());
        }
        assert_eq!(s.rank(0).unwrap(), 0);
        assert_eq!(s.rank(1000).unwrap(), s.count_ones());
        // complement rank/select are consistent
        let c = s.complement();
        assert_eq!(c.count_ones() + s.count_ones(), 1000);
        assert_eq!(s.select_zero(1).unwrap(), c.select(1).unwrap());
    }

    #[test]
    fn compose_matches_hand_evaluation() {
        // I = evens as a prefix of length 12, J = odds as a prefix of length 6.
        let i = SubsetPrefix::from_elements(&[2, 4, 6, 8, 10, 12], 12).unwrap();
        let j = SubsetPrefix::from_elements(&[1, 3, 5], 6).unwrap();
        let r = compose_subsets(&i, &j).unwrap();
        assert_eq!(r.element_list(), vec![2, 6, 10]);
        assert_eq!(r.len(), 12);
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let mut rng = stream_rng(0, 3);
        let ones = SubsetPrefix::sample(&mut rng, 1.0, 40).unwrap();
        let j = SubsetPrefix::sample(&mut rng, 0.5, 20).unwrap();
        let r = compose_subsets(&ones, &j).unwrap();
        assert_eq!(r.element_list(), j.element_list());
        assert_eq!(r.len(), 20);
    }

    #[test]
    fn compose_demands_enough_of_i() {
        let i = SubsetPrefix::parse("110000").unwrap(); // two elements
        let j = SubsetPrefix::parse("101").unwrap(); // max element 3
        match compose_subsets(&i, &j) {
            Err(Error::InsufficientPrefix { demanded: 3, available: 2, .. }) => {}
            other => panic!("expected InsufficientPrefix, got {other:?}"),
        }
    }

    #[test]
    fn compose_satisfies_psi_identity() {
        let mut rng = stream_rng(0, 4);
        for _ in 0..200 {
            let i = SubsetPrefix::sample(&mut rng, 0.5, 400).unwrap();
            let j = SubsetPrefix::sample(&mut rng, 0.5, 80).unwrap();
            let r = match compose_subsets(&i, &j) {
                Ok(r) => r,
                Err(Error::InsufficientPrefix { .. }) => continue,
                Err(e) => panic!("unexpected error {e}"),
            };
            let k = r.count_ones().min(j.count_ones());
            for idx in 1..=k {
                assert_eq!(r.select(idx).unwrap(), i.select(j.select(idx).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn extract_word_matches_fixture() {
        let x = WordPrefix::parse("bbabaaaaabbb").unwrap();
        let i = SubsetPrefix::from_elements(&[2, 5, 7, 9, 10, 11], 12).unwrap();
        assert_eq!(extract_word(&x, &i, 6).unwrap().to_string(), "baaabb");
        let ones = SubsetPrefix::from_elements(&[1, 2, 3, 4], 4).unwrap();
        assert_eq!(extract_word(&x, &ones, 4).unwrap().to_string(), "bbab");
    }

    #[test]
    fn complement_split_reconstructs_word() {
        let mut rng = stream_rng(0, 5);
        for _ in 0..100 {
            let x = WordPrefix::sample_uniform(&mut rng, 120);
            let i = SubsetPrefix::sample(&mut rng, 0.5, 120).unwrap();
            let kept = extract_word_avail(&x, &i);
            let rejected = extract_word_avail(&x, &i.complement());
            for pos in 1..=120u64 {
                let letter = if i.contains(pos).unwrap() {
                    kept.get(i.rank(pos).unwrap()).unwrap()
                } else {
                    rejected.get(i.complement().rank(pos).unwrap()).unwrap()
                };
                assert_eq!(letter, x.get(pos).unwrap());
            }
        }
    }

    #[test]
    fn serialization_round_trips() {
        let s = SubsetPrefix::parse("0100110").unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "\"0100110\"");
        assert_eq!(serde_json::from_str::<SubsetPrefix>(&json).unwrap(), s);
        let w = WordPrefix::parse("abba").unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "\"abba\"");
        assert_eq!(serde_json::from_str::<WordPrefix>(&json).unwrap(), w);
    }
}
