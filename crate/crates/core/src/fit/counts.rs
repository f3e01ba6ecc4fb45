use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::seq::Sequence;

/// Observed sequence types and their counts, per round. Types are keyed by
/// their double-stranded name ([`Sequence::canonical_type`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundCounts {
    k: usize,
    rounds: Vec<Vec<(Sequence, u64)>>,
}

impl RoundCounts {
    /// Aggregates `(sequence, count, round)` records. Rounds are numbered
    /// from 1; a round with no records is kept as an empty round.
    pub fn from_records(records: impl IntoIterator<Item = (Sequence, u64, usize)>) -> Result<Self> {
        let mut k = None;
        let mut by_round: BTreeMap<usize, BTreeMap<Sequence, u64>> = BTreeMap::new();
        for (seq, count, round) in records {
            match k {
                None => k = Some(seq.len()),
                Some(k) if k != seq.len() => {
                    return Err(Error::LengthMismatch {
                        expected: k,
                        found: seq.len(),
                    })
                }
                _ => {}
            }
            if count == 0 {
                return Err(Error::invalid("counts must be at least 1"));
            }
            if round == 0 {
                return Err(Error::invalid("rounds are numbered from 1"));
            }
            *by_round
                .entry(round)
                .or_default()
                .entry(seq.canonical_type())
                .or_insert(0) += count;
        }
        let k = k.ok_or_else(|| Error::invalid("no observations"))?;
        let n_rounds = *by_round.keys().next_back().expect("non-empty");
        let mut rounds = vec![Vec::new(); n_rounds];
        for (r, types) in by_round {
            rounds[r - 1] = types.into_iter().collect();
        }
        Ok(RoundCounts { k, rounds })
    }

    /// Builds counts from per-round lists, round 1 first.
    pub fn from_rounds(k: usize, rounds: Vec<Vec<(Sequence, u64)>>) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::invalid("at least one round is required"));
        }
        let n = rounds.len();
        let records = rounds
            .into_iter()
            .enumerate()
            .flat_map(|(r, v)| v.into_iter().map(move |(s, c)| (s, c, r + 1)));
        let mut out = Self::from_records(records).or_else(|e| match e {
            Error::InvalidParameter(ref m) if m == "no observations" => Ok(RoundCounts { k, rounds: Vec::new() }),
            e => Err(e),
        })?;
        if out.k != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: out.k,
            });
        }
        out.rounds.resize(n, Vec::new());
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of rounds, `R`.
    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Types observed in round `r` (1-based), sorted.
    pub fn round(&self, r: usize) -> &[(Sequence, u64)] {
        &self.rounds[r - 1]
    }

    pub fn round_total(&self, r: usize) -> u64 {
        self.round(r).iter().map(|e| e.1).sum()
    }

    pub fn total(&self) -> u64 {
        (1..=self.rounds()).map(|r| self.round_total(r)).sum()
    }

    /// `(sequence, count, round)` for every entry, round-major.
    pub fn records(&self) -> impl Iterator<Item = (&Sequence, u64, usize)> {
        self.rounds
            .iter()
            .enumerate()
            .flat_map(|(r, v)| v.iter().map(move |(s, c)| (s, *c, r + 1)))
    }
}
