//! Likelihood over all rounds and its maximization.
//!
//! The objective is `sum_r sum_i l_ir * ln P_r(S_i)`, where the normalizing
//! sums come from one fixed Monte Carlo sample shared by every prefix and
//! every evaluation. With the sample fixed the objective is a deterministic
//! function of the parameters, which the simplex search relies on.

mod counts;
pub mod simplex;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::energy::{EnergyMatrix, Naming, WindowIndex};
use crate::error::{Error, Result};
use crate::rng::{substream, TAG_RESTART};
use crate::seq::Sequence;
use crate::thermo::{DenominatorEstimate, McSample, RoundFactors, SelexModel};

pub use counts::RoundCounts;
pub use simplex::{nelder_mead, SimplexConfig, SimplexOutcome};

/// Default Monte Carlo sample size for the normalizing sums.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_RESTARTS: usize = 50;
pub const DEFAULT_REFINE: usize = 3;
pub const DEFAULT_REFINE_PASSES: usize = 20;

/// Range of the uniform draws for starting energies.
const START_ENERGY: (f64, f64) = (-5.0, 0.0);
/// Range of the uniform draws for starting log concentrations.
const START_LOG_TF: (f64, f64) = (-3.0, 0.0);
const START_C_JUNK: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub site_len: usize,
    /// Fit the junk constant (as a logit); otherwise hold it at `c_junk`.
    pub fit_junk: bool,
    pub c_junk: f64,
    /// Fixed per-round log concentrations; `None` fits them.
    pub log_tf: Option<Vec<f64>>,
    pub restarts: usize,
    /// Number of best restarts that are re-run from their end points until a
    /// pass converges without improving.
    pub refine: usize,
    /// Cap on simplex runs per refined restart, the first ascent included.
    pub refine_passes: usize,
    pub simplex: SimplexConfig,
    pub mc_sample_size: usize,
    pub seed: u64,
    /// Restrict the search to these positions (0-based); the other rows, and
    /// the pinned cell of each free row, keep the values of `template`.
    pub free_positions: Option<Vec<usize>>,
    pub template: Option<EnergyMatrix>,
}

impl FitConfig {
    pub fn new(site_len: usize, seed: u64) -> Self {
        FitConfig {
            site_len,
            fit_junk: false,
            c_junk: 0.0,
            log_tf: None,
            restarts: DEFAULT_RESTARTS,
            refine: DEFAULT_REFINE,
            refine_passes: DEFAULT_REFINE_PASSES,
            simplex: SimplexConfig::default(),
            mc_sample_size: DEFAULT_MC_SAMPLES,
            seed,
            free_positions: None,
            template: None,
        }
    }

    pub fn validate(&self, data: &RoundCounts) -> Result<()> {
        if self.site_len == 0 || self.site_len > data.k() {
            return Err(Error::SiteTooLong {
                site: self.site_len,
                sequence: data.k(),
            });
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.mc_sample_size == 0 {
            return Err(Error::invalid("Monte Carlo sample size must be at least 1"));
        }
        self.simplex.validate().map_err(Error::InvalidParameter)?;
        if !(0.0..=1.0).contains(&self.c_junk) {
            return Err(Error::invalid("c_junk must lie in [0, 1]"));
        }
        if let Some(v) = &self.log_tf {
            if v.len() != data.rounds() {
                return Err(Error::invalid(format!(
                    "{} log_tf values supplied for {} rounds",
                    v.len(),
                    data.rounds()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("log_tf values must be finite"));
            }
        }
        if let Some(t) = &self.template {
            if t.len() != self.site_len {
                return Err(Error::LengthMismatch {
                    expected: self.site_len,
                    found: t.len(),
                });
            }
        }
        if let Some(free) = &self.free_positions {
            if self.template.is_none() {
                return Err(Error::invalid("free positions require a template matrix"));
            }
            if free.iter().any(|&p| p >= self.site_len) {
                return Err(Error::invalid("free position outside the site"));
            }
        }
        Ok(())
    }
}

/// Outcome of one simplex ascent.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartTrace {
    pub index: usize,
    pub start: Vec<f64>,
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Simplex runs made, counting refinement.
    pub passes: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Normalized model: every row maximum is 0, the level absorbed into log_tf.
    pub model: SelexModel,
    /// Naming applied to reach the canonical orientation.
    pub orientation: Naming,
    /// With fixed log_tf, the fitted consensus score (the shift absorbed).
    pub consensus_energy: Option<f64>,
    pub log_likelihood: f64,
    pub best_restart: usize,
    pub traces: Vec<RestartTrace>,
    pub mc_sample_size: usize,
    pub seed: u64,
}

/// Moves every row maximum to 0, compensating in log_tf, then picks the
/// canonical orientation. Best-site scores, binding probabilities and the
/// likelihood are unchanged.
pub fn apply_identifiability(model: &SelexModel) -> (SelexModel, Naming) {
    let ddg = model.matrix().normalize_ddg();
    let (matrix, naming) = ddg.matrix.canonical_orientation();
    let log_tf = model.log_tf().iter().map(|a| a + ddg.shift).collect();
    let out = SelexModel::new(matrix, log_tf, model.c_junk()).expect("shifting finite parameters keeps them finite");
    (out, naming)
}

/// Reference log-likelihood: `sum_r sum_i l_ir * ln(round_prob)`. Returns
/// `-inf` if any term is not finite.
pub fn log_likelihood(model: &SelexModel, data: &RoundCounts, denoms: &[DenominatorEstimate]) -> Result<f64> {
    if model.rounds() < data.rounds() || denoms.len() < data.rounds() {
        return Err(Error::invalid("model or denominators cover fewer rounds than the data"));
    }
    let mut total = 0.0;
    for r in 1..=data.rounds() {
        let log_d = denoms[r - 1].log_value;
        for (s, count) in data.round(r) {
            total += *count as f64 * (model.log_selection_weight(s, r)? - log_d);
        }
    }
    if total.is_finite() {
        Ok(total)
    } else {
        log::debug!("non-finite log-likelihood");
        Ok(f64::NEG_INFINITY)
    }
}

/// Maps a flat parameter vector to a model.
#[derive(Clone, Debug)]
struct Layout {
    site_len: usize,
    rounds: usize,
    template: EnergyMatrix,
    free_rows: Vec<usize>,
    /// Pinned column of each free row.
    pinned: Vec<usize>,
    anchor: bool,
    fixed_log_tf: Option<Vec<f64>>,
    fit_junk: bool,
    c_junk: f64,
}

impl Layout {
    fn new(cfg: &FitConfig, rounds: usize, pinned: Vec<usize>) -> Self {
        let free_rows = cfg
            .free_positions
            .clone()
            .unwrap_or_else(|| (0..cfg.site_len).collect());
        let template = cfg
            .template
            .clone()
            .unwrap_or_else(|| EnergyMatrix::zeros(cfg.site_len).expect("site_len >= 1"));
        let anchor = cfg.log_tf.is_some() && free_rows.len() == cfg.site_len;
        Layout {
            site_len: cfg.site_len,
            rounds,
            template,
            free_rows,
            pinned,
            anchor,
            fixed_log_tf: cfg.log_tf.clone(),
            fit_junk: cfg.fit_junk,
            c_junk: cfg.c_junk,
        }
    }

    fn dim(&self) -> usize {
        3 * self.free_rows.len()
            + usize::from(self.anchor)
            + if self.fixed_log_tf.is_none() { self.rounds } else { 0 }
            + usize::from(self.fit_junk)
    }

    fn decode(&self, x: &[f64]) -> (Vec<[f64; 4]>, Vec<f64>, f64) {
        let mut rows = self.template.rows().to_vec();
        let mut it = x.iter().copied();
        for (&p, &pin) in self.free_rows.iter().zip(&self.pinned) {
            let base = self.template.rows()[p][pin];
            for b in (0..4).filter(|&b| b != pin) {
                rows[p][b] = base + it.next().expect("dimension");
            }
        }
        if self.anchor {
            let a = it.next().expect("dimension");
            let p = self.free_rows[0];
            for v in rows[p].iter_mut() {
                *v += a;
            }
        }
        let log_tf = match &self.fixed_log_tf {
            Some(v) => v.clone(),
            None => (0..self.rounds).map(|_| it.next().expect("dimension")).collect(),
        };
        let c_junk = if self.fit_junk {
            crate::thermo::sigmoid(it.next().expect("dimension"))
        } else {
            self.c_junk
        };
        (rows, log_tf, c_junk)
    }

    fn random_start<R: Rng>(site_len: usize, rng: &mut R) -> Vec<[f64; 4]> {
        (0..site_len)
            .map(|_| std::array::from_fn(|_| rng.gen_range(START_ENERGY.0..START_ENERGY.1)))
            .collect()
    }

    /// Encodes a starting point drawn around `start_rows`.
    fn encode_start<R: Rng>(&self, start_rows: &[[f64; 4]], rng: &mut R) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        let mut shift = 0.0;
        for (&p, &pin) in self.free_rows.iter().zip(&self.pinned) {
            let top = start_rows[p][pin];
            shift += top - self.template.rows()[p][pin];
            for b in (0..4).filter(|&b| b != pin) {
                x.push(start_rows[p][b] - top);
            }
        }
        if self.anchor {
            x.push(shift);
        }
        if self.fixed_log_tf.is_none() {
            for _ in 0..self.rounds {
                x.push(rng.gen_range(START_LOG_TF.0..START_LOG_TF.1));
            }
        }
        if self.fit_junk {
            x.push((START_C_JUNK / (1.0 - START_C_JUNK)).ln());
        }
        x
    }
}

/// Fast objective over pre-indexed data and Monte Carlo windows.
struct Objective<'a> {
    layout: Layout,
    sample: &'a McSample,
    /// Each distinct observed type, indexed once.
    observed: WindowIndex,
    /// `(round, count)` pairs of each distinct type, rounds ascending.
    counts: Vec<Vec<(usize, f64)>>,
    round_totals: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(layout: Layout, data: &RoundCounts, sample: &'a McSample) -> Result<Self> {
        let mut by_type: BTreeMap<&Sequence, Vec<(usize, f64)>> = BTreeMap::new();
        for (s, c, r) in data.records() {
            by_type.entry(s).or_default().push((r, c as f64));
        }
        let observed = WindowIndex::new(layout.site_len, data.k(), by_type.keys().map(|s| s.codes()))?;
        let counts = by_type.into_values().collect();
        let round_totals = (1..=data.rounds()).map(|r| data.round_total(r) as f64).collect();
        Ok(Objective {
            layout,
            sample,
            observed,
            counts,
            round_totals,
        })
    }

    fn eval_model(&self, rows: Vec<[f64; 4]>, log_tf: &[f64], c_junk: f64) -> f64 {
        let matrix = EnergyMatrix::from_rows_unchecked(rows);
        let compiled = matrix.compile();
        let denoms = self.sample.estimate_compiled(&compiled, log_tf, c_junk);
        let factors = RoundFactors::new(log_tf, c_junk);
        let mut total = 0.0;
        let mut lw = vec![0.0; log_tf.len()];
        for (i, counts) in self.counts.iter().enumerate() {
            let last = counts.last().expect("at least one round").0;
            factors.log_prefixes(self.observed.best_energy(&compiled, i), &mut lw[..last]);
            total += counts.iter().map(|&(r, c)| c * lw[r - 1]).sum::<f64>();
        }
        for (n, d) in self.round_totals.iter().zip(&denoms) {
            total -= n * d.log_value;
        }
        if total.is_finite() {
            total
        } else {
            f64::NEG_INFINITY
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let (rows, log_tf, c) = self.layout.decode(x);
        self.eval_model(rows, &log_tf, c)
    }
}

/// Runs `config.restarts` independent simplex ascents from random starts and
/// returns the best, projected onto the identifiable parameterization.
pub fn multi_start_fit(data: &RoundCounts, config: &FitConfig) -> Result<FitResult> {
    config.validate(data)?;
    let sample = McSample::new(data.k(), config.site_len, config.mc_sample_size, config.seed)?;
    fit_with_sample(data, config, &sample)
}

/// As [`multi_start_fit`], with a caller-supplied Monte Carlo sample.
pub fn fit_with_sample(data: &RoundCounts, config: &FitConfig, sample: &McSample) -> Result<FitResult> {
    config.validate(data)?;
    if sample.k() != data.k() || sample.site_len() != config.site_len {
        return Err(Error::invalid("Monte Carlo sample does not match the data"));
    }
    let rounds = data.rounds();
    let mut traces: Vec<(RestartTrace, Layout)> = (0..config.restarts)
        .into_par_iter()
        .map(|index| {
            let mut rng = substream(config.seed, &[TAG_RESTART, index as u64]);
            let start_rows = match &config.template {
                Some(t) => t.rows().to_vec(),
                None => Layout::random_start(config.site_len, &mut rng),
            };
            let pinned = pinned_columns(&start_rows);
            let layout = Layout::new(config, rounds, pinned);
            let start_rows = match &config.template {
                // Free cells of a template fit start at random offsets below the pinned cell.
                Some(t) => {
                    let mut rows = t.rows().to_vec();
                    for (&p, &pin) in layout.free_rows.iter().zip(&layout.pinned) {
                        for b in (0..4).filter(|&b| b != pin) {
                            rows[p][b] = rows[p][pin] + rng.gen_range(START_ENERGY.0..START_ENERGY.1);
                        }
                    }
                    rows
                }
                None => start_rows,
            };
            let start = layout.encode_start(&start_rows, &mut rng);
            let objective = Objective::new(layout.clone(), data, sample)?;
            let out = nelder_mead(|x| objective.eval(x), &start, &config.simplex);
            Ok((
                RestartTrace {
                    index,
                    start,
                    point: out.point,
                    value: out.value,
                    iterations: out.iterations,
                    evaluations: out.evaluations,
                    converged: out.converged,
                    passes: 1,
                },
                layout,
            ))
        })
        .collect::<Result<_>>()?;
    refine(&mut traces, data, sample, config)?;

    let winner = traces
        .iter()
        .filter(|(t, _)| t.value.is_finite())
        .max_by(|(a, _), (b, _)| a.value.total_cmp(&b.value).then(b.index.cmp(&a.index)));
    let Some((best, layout)) = winner else {
        return Err(Error::AllRestartsDiverged {
            restarts: config.restarts,
            traces: traces.into_iter().map(|(t, _)| t).collect(),
        });
    };
    let (rows, log_tf, c_junk) = layout.decode(&best.point);
    let raw = SelexModel::new(EnergyMatrix::new(rows)?, log_tf, c_junk)?;
    let (model, orientation) = apply_identifiability(&raw);
    let consensus_energy = config.log_tf.as_ref().map(|fixed| model.log_tf()[0] - fixed[0]);
    let best_restart = best.index;
    let log_likelihood = best.value;
    Ok(FitResult {
        model,
        orientation,
        consensus_energy,
        log_likelihood,
        best_restart,
        traces: traces.into_iter().map(|(t, _)| t).collect(),
        mc_sample_size: sample.size(),
        seed: config.seed,
    })
}

/// Restarts the simplex from the end points of the best few ascents. A capped
/// or collapsed simplex often stalls well short of the optimum; a fresh
/// simplex around the same point keeps climbing.
fn refine(
    traces: &mut [(RestartTrace, Layout)],
    data: &RoundCounts,
    sample: &McSample,
    config: &FitConfig,
) -> Result<()> {
    let mut order: Vec<usize> = (0..traces.len()).filter(|&i| traces[i].0.value.is_finite()).collect();
    order.sort_by(|&a, &b| traces[b].0.value.total_cmp(&traces[a].0.value).then(a.cmp(&b)));
    order.truncate(config.refine);
    let refined: Vec<(usize, RestartTrace)> = order
        .into_par_iter()
        .map(|i| {
            let (trace, layout) = &traces[i];
            let objective = Objective::new(layout.clone(), data, sample)?;
            let mut t = trace.clone();
            while t.passes < config.refine_passes {
                let out = nelder_mead(|x| objective.eval(x), &t.point, &config.simplex);
                t.passes += 1;
                t.iterations += out.iterations;
                t.evaluations += out.evaluations;
                let gain = out.value - t.value;
                if gain > 0.0 {
                    t.point = out.point;
                    t.value = out.value;
                }
                t.converged = out.converged;
                if out.converged && gain <= config.simplex.f_tol {
                    break;
                }
            }
            Ok((i, t))
        })
        .collect::<Result<_>>()?;
    for (i, t) in refined {
        traces[i].0 = t;
    }
    Ok(())
}

fn pinned_columns(rows: &[[f64; 4]]) -> Vec<usize> {
    rows.iter()
        .map(|r| (0..4).fold(0, |best, b| if r[b] > r[best] { b } else { best }))
        .collect()
}

/// Log-likelihood of `model` using a given sample's denominators, via the
/// same fast path the optimizer uses.
pub fn sample_log_likelihood(model: &SelexModel, data: &RoundCounts, sample: &McSample) -> Result<f64> {
    let cfg = FitConfig {
        log_tf: Some(model.log_tf().to_vec()),
        c_junk: model.c_junk(),
        template: Some(model.matrix().clone()),
        free_positions: Some(Vec::new()),
        ..FitConfig::new(model.site_len(), sample.seed())
    };
    if model.rounds() != data.rounds() {
        return Err(Error::invalid("model and data have different round counts"));
    }
    cfg.validate(data)?;
    let layout = Layout::new(&cfg, data.rounds(), Vec::new());
    let objective = Objective::new(layout, data, sample)?;
    Ok(objective.eval_model(model.matrix().rows().to_vec(), model.log_tf(), model.c_junk()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::tests::table3;
    use crate::seq::all_kmers;
    use crate::thermo::exact_denominator;

    fn s(t: &str) -> Sequence {
        Sequence::parse(t).unwrap()
    }

    #[test]
    fn uniform_two_type_likelihood() {
        // k = l = 2 has 10 double-stranded types; a uniform model gives each 1/10.
        let data = RoundCounts::from_records([(s("AC"), 3, 1), (s("AG"), 1, 1)]).unwrap();
        let model = SelexModel::new(EnergyMatrix::zeros(2).unwrap(), vec![0.0], 0.0).unwrap();
        let d = DenominatorEstimate::exact(1, exact_denominator(&model, 1, 2).unwrap());
        let ll = log_likelihood(&model, &data, &[d]).unwrap();
        assert!((ll - 4.0 * (0.1f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn fast_and_reference_likelihoods_agree() {
        let data = RoundCounts::from_records([
            (s("GGATTAGGGGACGTAC"), 3, 1),
            (s("ACGTACGTACGTACGT"), 1, 1),
            (s("TTTCCCTAATCCATGC"), 2, 2),
            (s("GGATTAGGGGACGTAC"), 5, 2),
        ])
        .unwrap();
        let model = SelexModel::new(table3(), vec![-1.0, 0.5], 0.02).unwrap();
        let sample = McSample::new(16, 10, 5000, 3).unwrap();
        let denoms = sample.estimate(&model).unwrap();
        let reference = log_likelihood(&model, &data, &denoms).unwrap();
        let fast = sample_log_likelihood(&model, &data, &sample).unwrap();
        assert!(
            (reference - fast).abs() < 1e-9 * reference.abs(),
            "{reference} vs {fast}"
        );
    }

    #[test]
    fn identifiability_preserves_scores() {
        let model = SelexModel::new(table3().shift_row(2, 1.3).shift_row(7, -0.4), vec![0.1, 0.7], 0.0).unwrap();
        let (fixed, naming) = apply_identifiability(&model);
        assert_eq!(naming, Naming::ReverseComplement);
        assert!(fixed.matrix().is_normalized());
        for x in all_kmers(5).unwrap().take(200) {
            let codes: Vec<u8> = x.codes().iter().chain(x.codes()).chain(x.codes()).copied().collect();
            let y = Sequence::from_codes(codes).unwrap();
            for r in 1..=2 {
                let a = model.bind_prob(&y, r).unwrap();
                let b = fixed.bind_prob(&y, r).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} {b}");
            }
        }
        let (again, n2) = apply_identifiability(&fixed);
        assert_eq!(n2, Naming::Identity);
        assert_eq!(again, fixed);
    }

    #[test]
    fn identifiability_on_table3() {
        let model = SelexModel::new(table3(), vec![0.5], 0.0).unwrap();
        let (fixed, _) = apply_identifiability(&model);
        assert_eq!(fixed.matrix(), &table3().relabel(Naming::ReverseComplement));
        assert_eq!(fixed.log_tf(), &[0.5]);
        let rc = SelexModel::new(table3().relabel(Naming::ReverseComplement), vec![0.5], 0.0).unwrap();
        assert_eq!(apply_identifiability(&rc).0, fixed);
    }

    #[test]
    fn gauge_invariance_of_likelihood() {
        let data = RoundCounts::from_records([(s("GGATTAGGGGACGTAC"), 3, 1), (s("TTTCCCTAATCCATGC"), 2, 2)]).unwrap();
        let model = SelexModel::new(table3(), vec![-1.0, 0.5], 0.0).unwrap();
        let shifted = model.gauge_shift(4, 1.7);
        let sample = McSample::new(16, 10, 4000, 8).unwrap();
        let a = sample_log_likelihood(&model, &data, &sample).unwrap();
        let b = sample_log_likelihood(&shifted, &data, &sample).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn config_validation() {
        let data = RoundCounts::from_records([(s("ACGT"), 1, 1)]).unwrap();
        let mut cfg = FitConfig::new(5, 1);
        assert!(cfg.validate(&data).is_err());
        cfg.site_len = 3;
        assert!(cfg.validate(&data).is_ok());
        cfg.restarts = 0;
        assert!(cfg.validate(&data).is_err());
        cfg.restarts = 1;
        cfg.log_tf = Some(vec![0.0, 1.0]);
        assert!(cfg.validate(&data).is_err());
        cfg.log_tf = None;
        cfg.free_positions = Some(vec![0]);
        assert!(cfg.validate(&data).is_err());
    }

    #[test]
    fn single_restart_equals_direct_simplex() {
        let data = RoundCounts::from_records([(s("AAC"), 5, 1), (s("ACG"), 2, 1), (s("CCA"), 1, 1)]).unwrap();
        let mut cfg = FitConfig::new(3, 4);
        cfg.restarts = 1;
        cfg.refine = 0;
        cfg.mc_sample_size = 500;
        cfg.simplex.max_iter = 2000;
        let fit = multi_start_fit(&data, &cfg).unwrap();
        assert_eq!(fit.traces.len(), 1);
        assert_eq!(fit.traces[0].passes, 1);

        // Re-run the single ascent by hand.
        let sample = McSample::new(3, 3, 500, 4).unwrap();
        let mut rng = substream(4, &[TAG_RESTART, 0]);
        let rows = Layout::random_start(3, &mut rng);
        let layout = Layout::new(&cfg, 1, pinned_columns(&rows));
        let start = layout.encode_start(&rows, &mut rng);
        assert_eq!(start, fit.traces[0].start);
        let objective = Objective::new(layout, &data, &sample).unwrap();
        let out = nelder_mead(|x| objective.eval(x), &start, &cfg.simplex);
        assert_eq!(out.value, fit.log_likelihood);
        assert_eq!(out.point, fit.traces[0].point);
    }

    #[test]
    fn refinement_only_climbs() {
        let data = RoundCounts::from_records([
            (s("AACGT"), 5, 1),
            (s("ACGTT"), 2, 1),
            (s("CCAGT"), 1, 1),
            (s("AACGA"), 3, 2),
        ])
        .unwrap();
        let mut cfg = FitConfig::new(3, 9);
        cfg.restarts = 4;
        cfg.mc_sample_size = 500;
        cfg.simplex.max_iter = 40;
        cfg.refine = 0;
        let capped = multi_start_fit(&data, &cfg).unwrap();
        cfg.refine = 2;
        let refined = multi_start_fit(&data, &cfg).unwrap();
        assert!(refined.log_likelihood > capped.log_likelihood);
        let grown: Vec<_> = refined.traces.iter().filter(|t| t.passes > 1).collect();
        assert_eq!(grown.len(), 2);
        for t in &refined.traces {
            let before = &capped.traces[t.index];
            assert_eq!(t.start, before.start);
            assert!(t.value >= before.value);
            assert!(t.passes <= cfg.refine_passes);
        }
    }
}
