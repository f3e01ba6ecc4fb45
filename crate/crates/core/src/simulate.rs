//! SELEX experiment simulator: uniform pool, per-round selection, PCR
//! back to the pool size, then sequencing of a sample drawn without
//! replacement. The unsampled remainder feeds the next round.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::RoundCounts;
use crate::rng::{substream, TAG_PCR, TAG_SAMPLE, TAG_SELECT};
use crate::seq::{random_pool, Sequence, SequencePool};
use crate::thermo::{log_survival, SelexModel};

/// Types per selection chunk; each chunk has its own substream.
const SELECT_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub pool_size: u64,
    pub k: usize,
    pub rounds: usize,
    pub sample_per_round: u64,
    /// Truth model; its log_tf supplies the per-round concentrations.
    pub model: SelexModel,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::invalid("at least one round is required"));
        }
        if self.sample_per_round == 0 || self.sample_per_round > self.pool_size {
            return Err(Error::invalid(format!(
                "sample size {} must lie in 1..={}",
                self.sample_per_round, self.pool_size
            )));
        }
        if self.model.rounds() < self.rounds {
            return Err(Error::invalid(format!(
                "model has log_tf for {} rounds, {} requested",
                self.model.rounds(),
                self.rounds
            )));
        }
        if self.model.site_len() > self.k {
            return Err(Error::SiteTooLong {
                site: self.model.site_len(),
                sequence: self.k,
            });
        }
        if usize::try_from(self.pool_size).is_err() {
            return Err(Error::Overflow(usize::MAX));
        }
        Ok(())
    }
}

/// Keeps each molecule of `pool` independently with its round-`r` binding
/// probability (junk-adjusted). Types are thinned by binomial draws.
pub fn select_round(pool: &SequencePool, model: &SelexModel, r: usize, seed: u64) -> Result<SequencePool> {
    if pool.is_empty() {
        return Err(Error::invalid("cannot select from an empty pool"));
    }
    if r == 0 || r > model.rounds() {
        return Err(Error::invalid(format!("round {r} outside 1..={}", model.rounds())));
    }
    if model.site_len() > pool.k() {
        return Err(Error::SiteTooLong {
            site: model.site_len(),
            sequence: pool.k(),
        });
    }
    let compiled = model.matrix().compile();
    let log_tf = model.log_tf()[r - 1];
    let c = model.c_junk();
    let kept: Vec<Vec<(Sequence, u64)>> = pool
        .entries()
        .par_chunks(SELECT_CHUNK)
        .enumerate()
        .map(|(chunk, entries)| {
            let mut rng = substream(seed, &[TAG_SELECT, r as u64, chunk as u64]);
            entries
                .iter()
                .filter_map(|(s, n)| {
                    let e = compiled.best_energy_codes(s.codes());
                    let p = log_survival(e + log_tf, c).exp().clamp(0.0, 1.0);
                    let kept = Binomial::new(*n, p).expect("p in [0, 1]").sample(&mut rng);
                    (kept > 0).then(|| (s.clone(), kept))
                })
                .collect()
        })
        .collect();
    Ok(SequencePool::from_sorted_unchecked(pool.k(), kept.concat()))
}

/// Fenwick tree over molecule counts, for multiplicity-weighted draws.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(counts: &[u64]) -> Self {
        let mut tree = vec![0; counts.len() + 1];
        for (i, &c) in counts.iter().enumerate() {
            let mut j = i + 1;
            while j < tree.len() {
                tree[j] += c;
                j += j & j.wrapping_neg();
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, i: usize, delta: i64) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] = self.tree[j].wrapping_add_signed(delta);
            j += j & j.wrapping_neg();
        }
    }

    /// Index holding the molecule of rank `target` (0-based).
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Draws a molecule uniformly from the current pool and duplicates it,
/// until the pool holds `target` molecules.
pub fn pcr_amplify(pool: &SequencePool, target: u64, seed: u64) -> Result<SequencePool> {
    if pool.is_empty() {
        return Err(Error::invalid("cannot amplify an empty pool"));
    }
    let mut total = pool.total();
    if target < total {
        return Err(Error::invalid(format!(
            "amplification target {target} is below the pool size {total}"
        )));
    }
    let mut counts: Vec<u64> = pool.entries().iter().map(|e| e.1).collect();
    let mut tree = Fenwick::new(&counts);
    let mut rng = substream(seed, &[TAG_PCR]);
    while total < target {
        let i = tree.find(rng.gen_range(0..total));
        counts[i] += 1;
        tree.add(i, 1);
        total += 1;
    }
    let entries = pool
        .entries()
        .iter()
        .zip(counts)
        .map(|((s, _), n)| (s.clone(), n))
        .collect();
    Ok(SequencePool::from_sorted_unchecked(pool.k(), entries))
}

/// Uniform sample of `m` molecules without replacement. Returns the sample
/// and the remainder.
pub fn sequence_sample(pool: &SequencePool, m: u64, seed: u64) -> Result<(SequencePool, SequencePool)> {
    let total = pool.total();
    if m == 0 || m > total {
        return Err(Error::invalid(format!(
            "cannot sample {m} molecules from a pool of {total}"
        )));
    }
    let mut remaining: Vec<u64> = pool.entries().iter().map(|e| e.1).collect();
    let mut taken = vec![0u64; remaining.len()];
    let mut tree = Fenwick::new(&remaining);
    let mut rng = substream(seed, &[TAG_SAMPLE]);
    let mut left = total;
    for _ in 0..m {
        let i = tree.find(rng.gen_range(0..left));
        remaining[i] -= 1;
        taken[i] += 1;
        tree.add(i, -1);
        left -= 1;
    }
    let split = |v: &[u64]| {
        let entries = pool
            .entries()
            .iter()
            .zip(v)
            .filter(|(_, &n)| n > 0)
            .map(|((s, _), &n)| (s.clone(), n))
            .collect();
        SequencePool::from_sorted_unchecked(pool.k(), entries)
    };
    Ok((split(&taken), split(&remaining)))
}

/// Pools at every stage of one simulated round.
#[derive(Clone, Debug)]
pub struct RoundTrace {
    pub selected: SequencePool,
    pub amplified: SequencePool,
    pub sample: SequencePool,
    pub remainder: SequencePool,
}

/// Runs the protocol and keeps every intermediate pool. Round 0 is
/// returned separately.
pub fn simulate_trace(config: &SimConfig) -> Result<(SequencePool, Vec<RoundTrace>)> {
    config.validate()?;
    let initial = random_pool(config.pool_size as usize, config.k, config.seed)?;
    let mut current = initial.clone();
    let mut trace = Vec::with_capacity(config.rounds);
    for r in 1..=config.rounds {
        let round_seed = crate::rng::derive_seed(config.seed, &[r as u64]);
        let selected = select_round(&current, &config.model, r, round_seed)?;
        if selected.is_empty() {
            return Err(Error::Depleted { round: r });
        }
        let amplified = pcr_amplify(&selected, config.pool_size, round_seed)?;
        let (sample, remainder) = sequence_sample(&amplified, config.sample_per_round, round_seed)?;
        log::debug!(
            "round {r}: {} selected, {} types sampled",
            selected.total(),
            sample.type_count()
        );
        current = remainder.clone();
        trace.push(RoundTrace {
            selected,
            amplified,
            sample,
            remainder,
        });
        if current.is_empty() && r < config.rounds {
            return Err(Error::Depleted { round: r + 1 });
        }
    }
    Ok((initial, trace))
}

/// Simulated sequencing counts for rounds `1..=config.rounds`.
pub fn simulate_selex(config: &SimConfig) -> Result<RoundCounts> {
    let (_, trace) = simulate_trace(config)?;
    RoundCounts::from_rounds(config.k, trace.into_iter().map(|t| t.sample.into_entries()).collect())
}
