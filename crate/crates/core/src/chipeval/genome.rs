//! Genome sequence with unscorable positions, excluded regions and peaks.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::seq::base_code;

/// Code stored for positions that cannot be scored (N and other ambiguity codes).
pub const UNSCORABLE: u8 = 4;

const AMBIGUITY: &str = "NRYKMSWBDHV";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contig {
    pub name: String,
    codes: Vec<u8>,
}

impl Contig {
    /// `codes` uses 0..=3 for A, C, G, T and [`UNSCORABLE`] for masked bases.
    pub fn new(name: impl Into<String>, codes: Vec<u8>) -> Result<Self> {
        if let Some(i) = codes.iter().position(|&c| c > UNSCORABLE) {
            return Err(Error::invalid(format!("invalid base code at offset {i}")));
        }
        Ok(Contig {
            name: name.into(),
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }
}

/// Half-open interval `[start, end)` on a contig, 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub contig: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    pub contig: String,
    /// 0-based position of the signal maximum.
    pub position: usize,
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Genome {
    contigs: Vec<Contig>,
    index: HashMap<String, usize>,
    exclusions: Vec<Region>,
}

impl Genome {
    pub fn new(contigs: Vec<Contig>) -> Result<Self> {
        let mut index = HashMap::with_capacity(contigs.len());
        for (i, c) in contigs.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate contig name '{}'", c.name)));
            }
        }
        Ok(Genome {
            contigs,
            index,
            exclusions: Vec::new(),
        })
    }

    /// Parses multi-record FASTA. Sequence lines may mix case; N and IUPAC
    /// ambiguity codes become unscorable positions.
    pub fn from_fasta(text: &str) -> Result<Self> {
        let mut contigs = Vec::new();
        let mut current: Option<(String, Vec<u8>)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if let Some(header) = line.strip_prefix('>') {
                let name = header.split_whitespace().next().unwrap_or("");
                if name.is_empty() {
                    return Err(Error::parse(i + 1, "FASTA header without a name"));
                }
                if let Some((n, codes)) = current.take() {
                    contigs.push(Contig::new(n, codes)?);
                }
                current = Some((name.to_string(), Vec::new()));
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let Some((_, codes)) = current.as_mut() else {
                return Err(Error::parse(i + 1, "sequence data before the first header"));
            };
            for (j, ch) in line.chars().enumerate() {
                let code = match base_code(ch) {
                    Some(c) => c,
                    None if AMBIGUITY.contains(ch.to_ascii_uppercase()) => UNSCORABLE,
                    None => return Err(Error::parse(i + 1, format!("invalid base '{ch}' in column {}", j + 1))),
                };
                codes.push(code);
            }
        }
        if let Some((n, codes)) = current {
            contigs.push(Contig::new(n, codes)?);
        }
        if contigs.is_empty() {
            return Err(Error::invalid("FASTA input contains no records"));
        }
        Genome::new(contigs)
    }

    pub fn contigs(&self) -> &[Contig] {
        &self.contigs
    }

    pub fn contig(&self, name: &str) -> Option<&Contig> {
        self.index.get(name).map(|&i| &self.contigs[i])
    }

    pub fn exclusions(&self) -> &[Region] {
        &self.exclusions
    }

    /// Adds excluded regions (peak regions, coding sequence, ...), checked
    /// against contig bounds.
    pub fn exclude(&mut self, regions: impl IntoIterator<Item = Region>) -> Result<()> {
        for r in regions {
            let len = self
                .contig(&r.contig)
                .ok_or_else(|| Error::invalid(format!("exclusion on unknown contig '{}'", r.contig)))?
                .len();
            if r.start >= r.end || r.end > len {
                return Err(Error::invalid(format!(
                    "exclusion {}:{}-{} outside contig of length {len}",
                    r.contig, r.start, r.end
                )));
            }
            self.exclusions.push(r);
        }
        Ok(())
    }

    /// Whether `[start, end)` on `contig` overlaps an excluded region.
    pub fn is_excluded(&self, contig: &str, start: usize, end: usize) -> bool {
        self.exclusions
            .iter()
            .any(|r| r.contig == contig && r.start < end && start < r.end)
    }

    /// Checks that every peak names a known contig and lies inside it.
    pub fn check_peaks(&self, peaks: &[Peak]) -> Result<()> {
        for p in peaks {
            let len = self
                .contig(&p.contig)
                .ok_or_else(|| Error::invalid(format!("peak on unknown contig '{}'", p.contig)))?
                .len();
            if p.position >= len {
                return Err(Error::invalid(format!(
                    "peak {}:{} outside contig of length {len}",
                    p.contig, p.position
                )));
            }
            if !p.score.is_finite() {
                return Err(Error::invalid(format!(
                    "peak {}:{} has a non-finite score",
                    p.contig, p.position
                )));
            }
        }
        Ok(())
    }
}
