//! The additive binding model.
//!
//! Entries are affinity scores in units of RT: the consensus base at each
//! position scores 0 after normalization, weaker bases score below 0, and a
//! site's score is the sum of its per-position entries. The Boltzmann weight
//! of a site is `exp(score + log_tf)`, i.e. the free energy is
//! `-score * RT`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::seq::{Sequence, Strand};

/// An `l x 4` table of per-position base scores, columns ordered A, C, G, T.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMatrix {
    rows: Vec<[f64; 4]>,
}

/// One of the four ways of naming a double-stranded site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Naming {
    Identity,
    Reverse,
    Complement,
    ReverseComplement,
}

impl Naming {
    pub const ALL: [Naming; 4] = [
        Naming::Identity,
        Naming::Reverse,
        Naming::Complement,
        Naming::ReverseComplement,
    ];

    /// Renames a sequence the same way [`EnergyMatrix::relabel`] renames a matrix.
    pub fn apply(self, s: &Sequence) -> Sequence {
        match self {
            Naming::Identity => s.clone(),
            Naming::Reverse => s.reverse(),
            Naming::Complement => s.complement(),
            Naming::ReverseComplement => s.reverse_complement(),
        }
    }
}

impl fmt::Display for Naming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Naming::Identity => "identity",
            Naming::Reverse => "reverse",
            Naming::Complement => "complement",
            Naming::ReverseComplement => "reverse-complement",
        })
    }
}

/// The best-scoring window of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteScore {
    pub site: Sequence,
    pub offset: usize,
    pub strand: Strand,
    pub energy: f64,
}

/// A matrix in relative (consensus = 0) form plus the total shift removed.
#[derive(Clone, Debug, PartialEq)]
pub struct DdgForm {
    pub matrix: EnergyMatrix,
    pub shift: f64,
}

impl EnergyMatrix {
    pub fn new(rows: Vec<[f64; 4]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("energy matrix needs at least one position"));
        }
        if let Some(p) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid(format!(
                "energy matrix position {} has a non-finite entry",
                p + 1
            )));
        }
        Ok(EnergyMatrix { rows })
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<[f64; 4]>) -> Self {
        EnergyMatrix { rows }
    }

    pub fn zeros(l: usize) -> Result<Self> {
        Self::new(vec![[0.0; 4]; l])
    }

    /// Site length.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn get(&self, position: usize, base: u8) -> f64 {
        self.rows[position][base as usize]
    }

    /// Score of a site of exactly `l` bases.
    pub fn delta_g(&self, site: &Sequence) -> Result<f64> {
        if site.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: site.len(),
            });
        }
        Ok(self.score_codes(site.codes()))
    }

    #[inline]
    pub(crate) fn score_codes(&self, codes: &[u8]) -> f64 {
        self.rows.iter().zip(codes).map(|(row, &b)| row[b as usize]).sum()
    }

    /// The highest-scoring window on either strand. Ties go to the forward
    /// strand, then to the smallest offset.
    pub fn best_site(&self, s: &Sequence) -> Result<SiteScore> {
        let l = self.len();
        let k = s.len();
        if l > k {
            return Err(Error::SiteTooLong { site: l, sequence: k });
        }
        let rc = s.reverse_complement();
        let mut best: Option<(f64, Strand, usize)> = None;
        for (strand, src) in [(Strand::Forward, s), (Strand::Reverse, &rc)] {
            for offset in 0..=k - l {
                let e = self.score_codes(&src.codes()[offset..offset + l]);
                if best.is_none_or(|(b, _, _)| e > b) {
                    best = Some((e, strand, offset));
                }
            }
        }
        let (energy, strand, offset) = best.expect("at least one window");
        let src = if strand == Strand::Forward { s } else { &rc };
        Ok(SiteScore {
            site: Sequence::from_codes_unchecked(src.codes()[offset..offset + l].to_vec()),
            offset,
            strand,
            energy,
        })
    }

    /// Shifts every row so its maximum is exactly 0. The sum of the removed
    /// row maxima is returned as `shift`, so `old score = new score + shift`.
    pub fn normalize_ddg(&self) -> DdgForm {
        let mut shift = 0.0;
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                shift += m;
                row.map(|v| v - m)
            })
            .collect();
        DdgForm {
            matrix: EnergyMatrix { rows },
            shift,
        }
    }

    /// True when every row maximum is exactly 0.
    pub fn is_normalized(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max) == 0.0)
    }

    /// Per-position argmax, ties broken alphabetically.
    pub fn consensus(&self) -> Sequence {
        let codes = self
            .rows
            .iter()
            .map(|row| {
                let mut best = 0;
                for b in 1..4 {
                    if row[b] > row[best] {
                        best = b;
                    }
                }
                best as u8
            })
            .collect();
        Sequence::from_codes_unchecked(codes)
    }

    /// The alphabetically first of the consensus's four names.
    pub fn canonical_consensus_name(&self) -> Sequence {
        self.consensus().four_names().swap_remove(0)
    }

    /// Renames the matrix. Reverse flips row order; complement swaps the A/T
    /// and C/G columns. Scoring `naming.apply(s)` with the relabeled matrix
    /// gives the same best-site score as scoring `s` with the original.
    pub fn relabel(&self, naming: Naming) -> EnergyMatrix {
        let comp = |r: &[f64; 4]| [r[3], r[2], r[1], r[0]];
        let rows = match naming {
            Naming::Identity => self.rows.clone(),
            Naming::Reverse => self.rows.iter().rev().copied().collect(),
            Naming::Complement => self.rows.iter().map(comp).collect(),
            Naming::ReverseComplement => self.rows.iter().rev().map(comp).collect(),
        };
        EnergyMatrix { rows }
    }

    /// Picks between the two namings that leave every sequence's score
    /// unchanged (identity and reverse complement): the one whose consensus
    /// comes first alphabetically. Palindromic consensus ties fall back to
    /// comparing entries.
    pub fn canonical_orientation(&self) -> (EnergyMatrix, Naming) {
        let rc = self.relabel(Naming::ReverseComplement);
        let order = self.consensus().cmp(&rc.consensus()).then_with(|| {
            self.rows
                .iter()
                .flatten()
                .zip(rc.rows.iter().flatten())
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
                .reverse()
        });
        if order == Ordering::Greater {
            (rc, Naming::ReverseComplement)
        } else {
            (self.clone(), Naming::Identity)
        }
    }

    /// Same matrix with `c` added to every entry of row `position`.
    pub fn shift_row(&self, position: usize, c: f64) -> EnergyMatrix {
        let mut rows = self.rows.clone();
        for v in rows[position].iter_mut() {
            *v += c;
        }
        EnergyMatrix { rows }
    }

    /// Multiplies every entry by `factor`, e.g. RT to convert scores to
    /// physical free-energy units (with a sign flip for ΔG).
    pub fn scaled(&self, factor: f64) -> EnergyMatrix {
        EnergyMatrix {
            rows: self.rows.iter().map(|r| r.map(|v| v * factor)).collect(),
        }
    }

    /// Precomputed lookup tables for bulk window scoring.
    pub fn compile(&self) -> CompiledMatrix {
        CompiledMatrix::new(self)
    }
}

/// Positions per lookup table.
pub(crate) const CHUNK: usize = 5;

/// Lookup-table form of an [`EnergyMatrix`]. A site is split into blocks of
/// up to five positions; each block's partial score is a single table lookup
/// keyed by its packed 2-bit codes.
#[derive(Clone, Debug)]
pub struct CompiledMatrix {
    l: usize,
    tables: Vec<Box<Table>>,
}

/// Entries per block table; shorter trailing blocks use a prefix.
const TABLE_LEN: usize = 1 << (2 * CHUNK);
type Table = [f64; TABLE_LEN];

impl CompiledMatrix {
    fn new(m: &EnergyMatrix) -> Self {
        let l = m.len();
        let tables = (0..l.div_ceil(CHUNK))
            .map(|c| {
                let start = c * CHUNK;
                let width = CHUNK.min(l - start);
                let mut table = Box::new([0.0; TABLE_LEN]);
                for key in 0..1usize << (2 * width) {
                    let mut v = 0.0;
                    for j in 0..width {
                        let b = (key >> (2 * (width - 1 - j))) & 3;
                        v += m.rows[start + j][b];
                    }
                    table[key] = v;
                }
                table
            })
            .collect();
        CompiledMatrix { l, tables }
    }

    pub fn site_len(&self) -> usize {
        self.l
    }

    /// Score of a window given its block keys.
    #[inline]
    pub(crate) fn score_keys(&self, keys: &[u16]) -> f64 {
        self.tables
            .iter()
            .zip(keys)
            .map(|(t, &k)| t[k as usize % TABLE_LEN])
            .sum()
    }

    /// Score of a window of 2-bit codes (no N allowed).
    #[inline]
    pub(crate) fn score_codes(&self, codes: &[u8]) -> f64 {
        let mut total = 0.0;
        for (c, table) in self.tables.iter().enumerate() {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(self.l);
            let key = codes[start..end].iter().fold(0usize, |acc, &b| (acc << 2) | b as usize);
            total += table[key % TABLE_LEN];
        }
        total
    }
    /// Best score over both strands of a full sequence of 2-bit codes.
    pub(crate) fn best_energy_codes(&self, codes: &[u8]) -> f64 {
        let rc: Vec<u8> = codes.iter().rev().map(|&b| 3 - b).collect();
        [codes, &rc[..]]
            .iter()
            .flat_map(|src| src.windows(self.l).map(|w| self.score_codes(w)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Block keys for every window of a batch of equal-length sequences, laid
/// out so a compiled matrix can score the whole batch without touching the
/// sequences again.
#[derive(Clone, Debug)]
pub struct WindowIndex {
    l: usize,
    n_chunks: usize,
    windows_per_seq: usize,
    keys: Vec<u16>,
}

impl WindowIndex {
    pub fn new<'a>(l: usize, k: usize, seqs: impl IntoIterator<Item = &'a [u8]>) -> Result<Self> {
        if l == 0 || l > k {
            return Err(Error::SiteTooLong { site: l, sequence: k });
        }
        let n_chunks = l.div_ceil(CHUNK);
        let windows_per_seq = 2 * (k - l + 1);
        let mut keys = Vec::new();
        let mut rc = vec![0u8; k];
        for codes in seqs {
            if codes.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    found: codes.len(),
                });
            }
            for (i, &b) in codes.iter().enumerate() {
                rc[k - 1 - i] = 3 - b;
            }
            for src in [codes, &rc[..]] {
                for offset in 0..=k - l {
                    let w = &src[offset..offset + l];
                    for c in 0..n_chunks {
                        let end = ((c + 1) * CHUNK).min(l);
                        let key = w[c * CHUNK..end].iter().fold(0u16, |acc, &b| (acc << 2) | b as u16);
                        keys.push(key);
                    }
                }
            }
        }
        Ok(WindowIndex {
            l,
            n_chunks,
            windows_per_seq,
            keys,
        })
    }

    pub fn site_len(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.keys.len() / (self.n_chunks * self.windows_per_seq)
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Best window score of sequence `i`.
    #[inline]
    pub fn best_energy(&self, m: &CompiledMatrix, i: usize) -> f64 {
        debug_assert_eq!(m.site_len(), self.l);
        let stride = self.n_chunks * self.windows_per_seq;
        let keys = &self.keys[i * stride..(i + 1) * stride];
        let pick = |best: f64, v: f64| if v > best { v } else { best };
        match self.n_chunks {
            2 => {
                let (t0, t1) = (&*m.tables[0], &*m.tables[1]);
                keys.chunks_exact(2)
                    .map(|w| t0[w[0] as usize % TABLE_LEN] + t1[w[1] as usize % TABLE_LEN])
                    .fold(f64::NEG_INFINITY, pick)
            }
            1 => {
                let t0 = &*m.tables[0];
                keys.iter()
                    .map(|&w| t0[w as usize % TABLE_LEN])
                    .fold(f64::NEG_INFINITY, pick)
            }
            n => keys
                .chunks_exact(n)
                .map(|w| m.score_keys(w))
                .fold(f64::NEG_INFINITY, pick),
        }
    }

    /// Best window scores of every indexed sequence.
    pub fn best_energies(&self, m: &CompiledMatrix) -> Vec<f64> {
        (0..self.len()).map(|i| self.best_energy(m, i)).collect()
    }
}
