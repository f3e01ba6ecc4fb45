//! DNA sequence primitives.
//!
//! Bases are stored as 2-bit codes (`A=0, C=1, G=2, T=3`), so the derived
//! ordering on [`Sequence`] is the lexicographic order `A < C < G < T` and
//! complementing a base is `3 - code`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{substream, TAG_POOL};

pub const ALPHABET: [char; 4] = ['A', 'C', 'G', 'T'];

/// Largest k for which exhaustive enumeration is allowed (4^k <= 10^7).
pub const MAX_ENUMERABLE_K: usize = 11;

#[inline]
pub fn base_code(c: char) -> Option<u8> {
    match c {
        'A' | 'a' => Some(0),
        'C' | 'c' => Some(1),
        'G' | 'g' => Some(2),
        'T' | 't' => Some(3),
        _ => None,
    }
}

#[inline]
pub fn code_char(code: u8) -> char {
    ALPHABET[code as usize]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strand {
    Forward,
    Reverse,
}

impl fmt::Display for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strand::Forward => "+",
            Strand::Reverse => "-",
        })
    }
}

/// An immutable, non-empty DNA string over `{A, C, G, T}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence {
    codes: Vec<u8>,
}

impl Sequence {
    /// Parses a case-insensitive ACGT string. Any other character is
    /// rejected, reporting its 1-based position.
    pub fn parse(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::EmptySequence);
        }
        let codes = text
            .chars()
            .enumerate()
            .map(|(i, c)| {
                base_code(c).ok_or(Error::InvalidBase {
                    position: i + 1,
                    found: c,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sequence { codes })
    }

    pub fn from_codes(codes: Vec<u8>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(i) = codes.iter().position(|&c| c > 3) {
            return Err(Error::InvalidBase {
                position: i + 1,
                found: '?',
            });
        }
        Ok(Sequence { codes })
    }

    pub(crate) fn from_codes_unchecked(codes: Vec<u8>) -> Self {
        debug_assert!(!codes.is_empty() && codes.iter().all(|&c| c < 4));
        Sequence { codes }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn reverse(&self) -> Sequence {
        Sequence {
            codes: self.codes.iter().rev().copied().collect(),
        }
    }

    pub fn complement(&self) -> Sequence {
        Sequence {
            codes: self.codes.iter().map(|&c| 3 - c).collect(),
        }
    }

    pub fn reverse_complement(&self) -> Sequence {
        Sequence {
            codes: self.codes.iter().rev().map(|&c| 3 - c).collect(),
        }
    }

    pub fn is_reverse_complement_palindrome(&self) -> bool {
        let n = self.codes.len();
        (0..n / 2 + n % 2).all(|i| self.codes[i] == 3 - self.codes[n - 1 - i])
    }

    /// The distinct members of `{s, reverse(s), complement(s), reverse_complement(s)}`,
    /// sorted lexicographically.
    pub fn four_names(&self) -> Vec<Sequence> {
        let mut names = vec![
            self.clone(),
            self.reverse(),
            self.complement(),
            self.reverse_complement(),
        ];
        names.sort();
        names.dedup();
        names
    }

    /// Name of the double-stranded molecule: the smaller of the sequence
    /// and its reverse complement.
    pub fn canonical_type(&self) -> Sequence {
        let rc = self.reverse_complement();
        if rc < *self {
            rc
        } else {
            self.clone()
        }
    }

    /// All length-`l` windows on both strands: forward offsets ascending,
    /// then offsets into the reverse complement ascending.
    pub fn windows(&self, l: usize) -> Result<Vec<Window>> {
        let k = self.len();
        if l == 0 {
            return Err(Error::invalid("window length must be at least 1"));
        }
        if l > k {
            return Err(Error::SiteTooLong { site: l, sequence: k });
        }
        let rc = self.reverse_complement();
        let mut out = Vec::with_capacity(2 * (k - l + 1));
        for (strand, src) in [(Strand::Forward, self), (Strand::Reverse, &rc)] {
            for offset in 0..=k - l {
                out.push(Window {
                    site: Sequence::from_codes_unchecked(src.codes[offset..offset + l].to_vec()),
                    offset,
                    strand,
                });
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.codes.iter().map(|&c| code_char(c)).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sequence({self})")
    }
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sequence::parse(s)
    }
}

/// A candidate binding site. For the reverse strand, `offset` indexes into
/// the reverse complement of the parent sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub site: Sequence,
    pub offset: usize,
    pub strand: Strand,
}

/// Number of sequence types as counted by `2^(k-1) + 4^(k-1)`.
pub fn count_distinct_types(k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let e = u32::try_from(k - 1).map_err(|_| Error::Overflow(k))?;
    let two = 2u64.checked_pow(e).ok_or(Error::Overflow(k))?;
    let four = 4u64.checked_pow(e).ok_or(Error::Overflow(k))?;
    two.checked_add(four).ok_or(Error::Overflow(k))
}

/// Number of reverse-complement classes of k-mers, `(4^k + p) / 2` where `p`
/// counts reverse-complement palindromes (`4^(k/2)` for even k, none for odd).
pub fn strand_class_count(k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let e = u32::try_from(k).map_err(|_| Error::Overflow(k))?;
    let all = 4u128.checked_pow(e).ok_or(Error::Overflow(k))?;
    let palindromes = if k.is_multiple_of(2) { 4u128.pow(e / 2) } else { 0 };
    u64::try_from((all + palindromes) / 2).map_err(|_| Error::Overflow(k))
}

fn check_enumerable(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > MAX_ENUMERABLE_K {
        return Err(Error::TooLargeToEnumerate(k));
    }
    Ok(())
}

/// Every k-mer in lexicographic order.
pub fn all_kmers(k: usize) -> Result<impl Iterator<Item = Sequence>> {
    check_enumerable(k)?;
    Ok((0..1u64 << (2 * k)).map(move |idx| {
        let codes = (0..k).map(|i| ((idx >> (2 * (k - 1 - i))) & 3) as u8).collect();
        Sequence::from_codes_unchecked(codes)
    }))
}

/// Counts reverse-complement classes by enumerating every k-mer.
pub fn brute_force_class_count(k: usize) -> Result<u64> {
    Ok(all_kmers(k)?.filter(|s| s.canonical_type() == *s).count() as u64)
}

/// A multiset of equal-length sequences, kept sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SequencePool {
    k: usize,
    entries: Vec<(Sequence, u64)>,
}

impl SequencePool {
    pub fn empty(k: usize) -> Self {
        SequencePool { k, entries: Vec::new() }
    }

    /// Builds a pool, merging duplicate sequences and dropping zero counts.
    pub fn from_entries(k: usize, entries: impl IntoIterator<Item = (Sequence, u64)>) -> Result<Self> {
        let mut v: Vec<(Sequence, u64)> = Vec::new();
        for (s, n) in entries {
            if s.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: s.len(),
                });
            }
            if n > 0 {
                v.push((s, n));
            }
        }
        Ok(Self::from_unsorted(k, v))
    }

    pub(crate) fn from_unsorted(k: usize, mut v: Vec<(Sequence, u64)>) -> Self {
        v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut entries: Vec<(Sequence, u64)> = Vec::with_capacity(v.len());
        for (s, n) in v {
            match entries.last_mut() {
                Some(last) if last.0 == s => last.1 += n,
                _ => entries.push((s, n)),
            }
        }
        SequencePool { k, entries }
    }

    /// Entries must already be sorted, unique and non-zero.
    pub(crate) fn from_sorted_unchecked(k: usize, entries: Vec<(Sequence, u64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|e| e.1 > 0));
        SequencePool { k, entries }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[(Sequence, u64)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(Sequence, u64)> {
        self.entries
    }

    pub fn type_count(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn multiplicity(&self, s: &Sequence) -> u64 {
        self.entries
            .binary_search_by(|e| e.0.cmp(s))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn contains(&self, s: &Sequence) -> bool {
        self.multiplicity(s) > 0
    }
}

const POOL_CHUNK: usize = 1 << 14;

/// `count` uniformly random k-mers. Generation runs in fixed-size chunks,
/// each with its own substream, so the result does not depend on the
/// number of worker threads.
pub fn random_pool(count: usize, k: usize, seed: u64) -> Result<SequencePool> {
    if count == 0 {
        return Err(Error::invalid("pool size must be at least 1"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n_chunks = count.div_ceil(POOL_CHUNK);
    let chunks: Vec<Vec<(Sequence, u64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = substream(seed, &[TAG_POOL, chunk as u64]);
            let n = POOL_CHUNK.min(count - chunk * POOL_CHUNK);
            (0..n)
                .map(|_| (Sequence::from_codes_unchecked(random_codes(&mut rng, k)), 1))
                .collect()
        })
        .collect();
    Ok(SequencePool::from_unsorted(k, chunks.concat()))
}

pub(crate) fn random_codes<R: RngCore>(rng: &mut R, k: usize) -> Vec<u8> {
    let mut codes = Vec::with_capacity(k);
    while codes.len() < k {
        let mut word = rng.next_u64();
        for _ in 0..32.min(k - codes.len()) {
            codes.push((word & 3) as u8);
            word >>= 2;
        }
    }
    codes
}
