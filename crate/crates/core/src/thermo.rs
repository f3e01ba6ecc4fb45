//! Binding and round-selection probabilities.
//!
//! A molecule whose best site scores `e` is bound in round `r` with
//! probability `t = w / (1 + w)`, `w = exp(log_tf[r] + e)`. With junk
//! binding the survival probability becomes `(1 - c) t + c`. The chance
//! that a type is sequenced after round `rbar` is its product of survival
//! probabilities over rounds `1..=rbar`, normalized over every
//! double-stranded type of length k.

use rayon::prelude::*;

use crate::energy::{CompiledMatrix, EnergyMatrix, WindowIndex};
use crate::error::{Error, Result};
use crate::rng::{substream, TAG_MC};
use crate::seq::{all_kmers, random_codes, strand_class_count, Sequence};

/// Gas constant in kJ / (mol K).
pub const GAS_CONSTANT_KJ: f64 = 8.314_462_618e-3;

/// `K = exp(-ΔG / RT)`.
pub fn equilibrium_constant(delta_g: f64, rt: f64) -> f64 {
    (-delta_g / rt).exp()
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// `(1 - c) t + c`.
#[inline]
pub fn bind_prob_junk(t: f64, c_junk: f64) -> f64 {
    (1.0 - c_junk) * t + c_junk
}

/// `ln((1 - c) sigmoid(x) + c)` evaluated without leaving log space.
#[inline]
pub fn log_survival(x: f64, c_junk: f64) -> f64 {
    let lt = log_sigmoid(x);
    if c_junk <= 0.0 {
        lt
    } else if c_junk >= 1.0 {
        0.0
    } else {
        let a = (1.0 - c_junk).ln() + lt;
        let b = c_junk.ln();
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Log selection weights for prefixes `1..=out.len()` of a type with best
/// score `energy`.
#[inline]
pub(crate) fn log_prefix_weights(energy: f64, log_tf: &[f64], c_junk: f64, out: &mut [f64]) {
    let mut acc = 0.0;
    for (o, &a) in out.iter_mut().zip(log_tf) {
        acc += log_survival(energy + a, c_junk);
        *o = acc;
    }
}

/// Per-round survival factors for repeated evaluation under one set of
/// concentrations. Uses `t = z / (1 + z)` with `z = exp(e) * exp(log_tf)`,
/// one exponential per sequence, and falls back to log space outside the
/// range where that product is exact enough.
pub(crate) struct RoundFactors<'a> {
    log_tf: &'a [f64],
    exp_tf: Vec<f64>,
    c_junk: f64,
    fast: bool,
}

/// Largest |exponent| handled by the single-exponential path.
const FAST_RANGE: f64 = 600.0;

impl<'a> RoundFactors<'a> {
    pub(crate) fn new(log_tf: &'a [f64], c_junk: f64) -> Self {
        RoundFactors {
            log_tf,
            exp_tf: log_tf.iter().map(|a| a.exp()).collect(),
            c_junk,
            fast: log_tf.iter().all(|a| a.abs() <= FAST_RANGE),
        }
    }

    /// Calls `f(prefix_weight)` for prefixes `1..=rounds` in order.
    #[inline]
    pub(crate) fn for_each_prefix(&self, energy: f64, rounds: usize, mut f: impl FnMut(f64)) {
        if self.fast && energy.abs() <= FAST_RANGE {
            let big = energy.exp();
            let mut w = 1.0;
            for &a in &self.exp_tf[..rounds] {
                let t = 1.0 / (1.0 + 1.0 / (big * a));
                w *= (1.0 - self.c_junk) * t + self.c_junk;
                f(w);
            }
        } else {
            let mut acc = 0.0;
            for &a in &self.log_tf[..rounds] {
                acc += log_survival(energy + a, self.c_junk);
                f(acc.exp());
            }
        }
    }

    /// Log selection weights for prefixes `1..=out.len()`.
    #[inline]
    pub(crate) fn log_prefixes(&self, energy: f64, out: &mut [f64]) {
        let n = out.len();
        let mut slot = out.iter_mut();
        let mut underflow = false;
        self.for_each_prefix(energy, n, |w| {
            underflow |= w <= 1e-300;
            *slot.next().expect("one slot per round") = w.ln();
        });
        if underflow {
            log_prefix_weights(energy, &self.log_tf[..n], self.c_junk, out);
        }
    }
}

/// Energy matrix, per-round log protein concentrations and the junk constant.
#[derive(Clone, Debug, PartialEq)]
pub struct SelexModel {
    matrix: EnergyMatrix,
    log_tf: Vec<f64>,
    c_junk: f64,
}

impl SelexModel {
    pub fn new(matrix: EnergyMatrix, log_tf: Vec<f64>, c_junk: f64) -> Result<Self> {
        if log_tf.is_empty() {
            return Err(Error::invalid("model needs at least one round"));
        }
        if log_tf.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("log_tf entries must be finite"));
        }
        if !(0.0..=1.0).contains(&c_junk) {
            return Err(Error::invalid(format!("c_junk {c_junk} outside [0, 1]")));
        }
        Ok(SelexModel { matrix, log_tf, c_junk })
    }

    pub fn matrix(&self) -> &EnergyMatrix {
        &self.matrix
    }

    pub fn log_tf(&self) -> &[f64] {
        &self.log_tf
    }

    pub fn c_junk(&self) -> f64 {
        self.c_junk
    }

    pub fn rounds(&self) -> usize {
        self.log_tf.len()
    }

    pub fn site_len(&self) -> usize {
        self.matrix.len()
    }

    fn check_round(&self, r: usize) -> Result<()> {
        if r == 0 || r > self.rounds() {
            return Err(Error::invalid(format!("round {r} outside 1..={}", self.rounds())));
        }
        Ok(())
    }

    fn logit(&self, s: &Sequence, r: usize) -> Result<f64> {
        self.check_round(r)?;
        Ok(self.log_tf[r - 1] + self.matrix.best_site(s)?.energy)
    }

    /// Probability that a molecule of `s` is specifically bound in round `r`.
    pub fn bind_prob(&self, s: &Sequence, r: usize) -> Result<f64> {
        Ok(sigmoid(self.logit(s, r)?))
    }

    /// `ln(t / (1 - t))` of the specific binding probability.
    pub fn log_odds(&self, s: &Sequence, r: usize) -> Result<f64> {
        let x = self.logit(s, r)?;
        Ok(log_sigmoid(x) - log_sigmoid(-x))
    }

    pub fn log_selection_weight(&self, s: &Sequence, rbar: usize) -> Result<f64> {
        self.check_round(rbar)?;
        let e = self.matrix.best_site(s)?.energy;
        Ok(self.log_tf[..rbar]
            .iter()
            .map(|&a| log_survival(e + a, self.c_junk))
            .sum())
    }

    /// Product of survival probabilities over rounds `1..=rbar`.
    pub fn selection_weight(&self, s: &Sequence, rbar: usize) -> Result<f64> {
        Ok(self.log_selection_weight(s, rbar)?.exp())
    }

    /// Same model with `c` added to row `position` and subtracted from every
    /// log concentration. Binding probabilities are unchanged.
    pub fn gauge_shift(&self, position: usize, c: f64) -> SelexModel {
        SelexModel {
            matrix: self.matrix.shift_row(position, c),
            log_tf: self.log_tf.iter().map(|a| a - c).collect(),
            c_junk: self.c_junk,
        }
    }
}

/// Estimate of the normalizing sum for one round prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenominatorEstimate {
    pub rbar: usize,
    pub value: f64,
    pub log_value: f64,
    pub standard_error: f64,
    pub sample_size: usize,
    pub seed: u64,
}

impl DenominatorEstimate {
    /// An exactly known denominator.
    pub fn exact(rbar: usize, value: f64) -> Self {
        DenominatorEstimate {
            rbar,
            value,
            log_value: value.ln(),
            standard_error: 0.0,
            sample_size: 0,
            seed: 0,
        }
    }
}

/// Number of double-stranded k-mer types used to scale Monte Carlo sums.
pub fn universe_size(k: usize) -> Result<f64> {
    Ok(strand_class_count(k)? as f64)
}

const MC_CHUNK: usize = 2048;

/// A fixed uniform sample of k-mers with its windows pre-indexed, reused
/// across every objective evaluation of a fit.
#[derive(Clone, Debug)]
pub struct McSample {
    k: usize,
    size: usize,
    seed: u64,
    log_scale: f64,
    n_types: f64,
    index: WindowIndex,
    /// Reverse-complement palindromes form classes of one, so their draws
    /// count double relative to ordinary strings.
    palindrome: Vec<bool>,
}

impl McSample {
    pub fn new(k: usize, l: usize, size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("Monte Carlo sample size must be at least 1"));
        }
        if l == 0 || l > k {
            return Err(Error::SiteTooLong { site: l, sequence: k });
        }
        let n_types = universe_size(k)?;
        let n_chunks = size.div_ceil(MC_CHUNK);
        let codes: Vec<Vec<u8>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream(seed, &[TAG_MC, c as u64]);
                let n = MC_CHUNK.min(size - c * MC_CHUNK);
                let mut buf = Vec::with_capacity(n * k);
                for _ in 0..n {
                    buf.extend(random_codes(&mut rng, k));
                }
                buf
            })
            .collect();
        let flat = codes.concat();
        let index = WindowIndex::new(l, k, flat.chunks_exact(k))?;
        let palindrome = flat
            .chunks_exact(k)
            .map(|c| k.is_multiple_of(2) && (0..k / 2).all(|i| c[i] == 3 - c[k - 1 - i]))
            .collect();
        // Each string stands for half a class: 4^k / 2 per draw.
        let log_half_strings = (2 * k - 1) as f64 * std::f64::consts::LN_2;
        Ok(McSample {
            k,
            size,
            seed,
            log_scale: log_half_strings - (size as f64).ln(),
            n_types,
            index,
            palindrome,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn site_len(&self) -> usize {
        self.index.site_len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_types(&self) -> f64 {
        self.n_types
    }

    /// Denominator estimates for every prefix `1..=model.rounds()`.
    pub fn estimate(&self, model: &SelexModel) -> Result<Vec<DenominatorEstimate>> {
        if model.site_len() != self.site_len() {
            return Err(Error::LengthMismatch {
                expected: self.site_len(),
                found: model.site_len(),
            });
        }
        let compiled = model.matrix().compile();
        Ok(self.estimate_compiled(&compiled, model.log_tf(), model.c_junk()))
    }

    pub(crate) fn estimate_compiled(
        &self,
        m: &CompiledMatrix,
        log_tf: &[f64],
        c_junk: f64,
    ) -> Vec<DenominatorEstimate> {
        let rounds = log_tf.len();
        // Per-chunk partial sums of w and w^2 for each prefix, in linear space.
        let partial: Vec<Vec<[f64; 2]>> = (0..self.size.div_ceil(MC_CHUNK))
            .into_par_iter()
            .map(|c| {
                let factors = RoundFactors::new(log_tf, c_junk);
                let mut acc = vec![[0.0f64; 2]; rounds];
                for i in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(self.size) {
                    let e = self.index.best_energy(m, i);
                    let f = if self.palindrome[i] { 2.0 } else { 1.0 };
                    let mut slot = acc.iter_mut();
                    factors.for_each_prefix(e, rounds, |w| {
                        let a = slot.next().expect("one slot per round");
                        let v = f * w;
                        a[0] += v;
                        a[1] += v * v;
                    });
                }
                acc
            })
            .collect();
        let mut out = Vec::with_capacity(rounds);
        for r in 0..rounds {
            let (sum, sumsq) = partial.iter().fold((0.0, 0.0), |(s, q), p| (s + p[r][0], q + p[r][1]));
            let est = if sum > 1e-250 && sumsq.is_finite() {
                self.finish(r + 1, sum.ln(), sum, sumsq)
            } else {
                self.estimate_log_space(m, log_tf, c_junk, r + 1)
            };
            out.push(est);
        }
        out
    }

    /// Fallback when linear-space weights underflow: sums are taken relative
    /// to the largest log weight.
    fn estimate_log_space(&self, m: &CompiledMatrix, log_tf: &[f64], c_junk: f64, rbar: usize) -> DenominatorEstimate {
        let mut lw = vec![0.0; rbar];
        let logs: Vec<f64> = (0..self.size)
            .map(|i| {
                log_prefix_weights(self.index.best_energy(m, i), &log_tf[..rbar], c_junk, &mut lw);
                lw[rbar - 1]
                    + if self.palindrome[i] {
                        std::f64::consts::LN_2
                    } else {
                        0.0
                    }
            })
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (sum, sumsq) = logs.iter().fold((0.0, 0.0), |(s, q), &x| {
            let w = (x - top).exp();
            (s + w, q + w * w)
        });
        let mut est = self.finish(rbar, top + sum.ln(), sum, sumsq);
        let scale = top.exp();
        est.standard_error *= scale;
        est
    }

    fn finish(&self, rbar: usize, log_sum: f64, sum: f64, sumsq: f64) -> DenominatorEstimate {
        let m = self.size as f64;
        let mean = sum / m;
        let var = if self.size > 1 {
            ((sumsq / m - mean * mean) * m / (m - 1.0)).max(0.0)
        } else {
            0.0
        };
        let log_value = log_sum + self.log_scale;
        DenominatorEstimate {
            rbar,
            value: log_value.exp(),
            log_value,
            standard_error: self.log_scale.exp() * m * (var / m).sqrt(),
            sample_size: self.size,
            seed: self.seed,
        }
    }
}

/// Monte Carlo estimate of the normalizing sum for prefix `rbar` from `size`
/// uniform k-mers: `4^k / (2M) * sum(weight)`, palindromic draws counted
/// twice, which is unbiased for the sum over reverse-complement classes.
pub fn mc_denominator(
    model: &SelexModel,
    rbar: usize,
    k: usize,
    size: usize,
    seed: u64,
) -> Result<DenominatorEstimate> {
    model.check_round(rbar)?;
    let sample = McSample::new(k, model.site_len(), size, seed)?;
    Ok(sample.estimate(model)?.swap_remove(rbar - 1))
}

/// Exact normalizing sum over every double-stranded k-mer type, each
/// reverse-complement class counted once.
pub fn exact_denominator(model: &SelexModel, rbar: usize, k: usize) -> Result<f64> {
    model.check_round(rbar)?;
    if model.site_len() > k {
        return Err(Error::SiteTooLong {
            site: model.site_len(),
            sequence: k,
        });
    }
    let mut total = 0.0;
    for s in all_kmers(k)? {
        if s.canonical_type() == s {
            total += model.selection_weight(&s, rbar)?;
        }
    }
    Ok(total)
}

/// Probability that `s` is the type drawn when sequencing after round `rbar`.
pub fn round_prob(model: &SelexModel, s: &Sequence, rbar: usize, denom: &DenominatorEstimate) -> Result<f64> {
    if denom.value.is_nan() || denom.value <= 0.0 {
        return Err(Error::invalid("denominator must be positive"));
    }
    Ok((model.log_selection_weight(s, rbar)? - denom.log_value).exp())
}
