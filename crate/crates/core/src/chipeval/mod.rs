//! Comparison of a scoring matrix against ChIP peaks.
//!
//! A score threshold is taken from random background windows; positions
//! scoring above it are hits. Hit vectors around the top peaks are summed,
//! smoothed and divided by the hit count expected from the background rate.

mod genome;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::energy::EnergyMatrix;
use crate::error::{Error, Result};
use crate::rng::{substream, TAG_BACKGROUND};

pub use genome::{Contig, Genome, Peak, Region, UNSCORABLE};

#[derive(Clone, Debug, PartialEq)]
pub struct ChipConfig {
    /// Number of top-scoring peaks used.
    pub n_peaks: usize,
    /// Half-width of the window around each peak, in bp.
    pub half_window: usize,
    /// Number of background windows for the null threshold.
    pub n_background: usize,
    /// Percentile level; values above 0.5 select the upper tail directly,
    /// values at or below 0.5 are read as `1 - alpha`.
    pub alpha: f64,
    /// Moving-average width in bp (odd).
    pub smoothing: usize,
    pub seed: u64,
}

impl ChipConfig {
    pub fn new(seed: u64) -> Self {
        ChipConfig {
            n_peaks: 100,
            half_window: 4000,
            n_background: 100,
            alpha: 0.999,
            smoothing: 201,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_peaks == 0 || self.half_window == 0 || self.n_background == 0 {
            return Err(Error::invalid(
                "peak count, half-window and background count must be positive",
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha must lie strictly between 0 and 1"));
        }
        if self.smoothing.is_multiple_of(2) {
            return Err(Error::invalid("smoothing width must be odd"));
        }
        if self.smoothing > 2 * self.half_window + 1 {
            return Err(Error::invalid("smoothing width exceeds the peak window"));
        }
        Ok(())
    }

    /// Quantile level actually used.
    pub fn upper_quantile(&self) -> f64 {
        if self.alpha <= 0.5 {
            1.0 - self.alpha
        } else {
            self.alpha
        }
    }
}

/// Per-position scores of `codes`: the larger of the forward and
/// reverse-strand scores of the window starting at each position. Windows
/// touching an unscorable base score NaN.
pub fn position_scores(matrix: &EnergyMatrix, codes: &[u8]) -> Vec<f64> {
    let l = matrix.len();
    if codes.len() < l {
        return Vec::new();
    }
    let rows = matrix.rows();
    let mut out = Vec::with_capacity(codes.len() - l + 1);
    // Distance to the next unscorable base, so each window is checked in O(1).
    let mut next_bad = vec![usize::MAX; codes.len() + 1];
    for i in (0..codes.len()).rev() {
        next_bad[i] = if codes[i] == UNSCORABLE { i } else { next_bad[i + 1] };
    }
    for start in 0..=codes.len() - l {
        if next_bad[start] < start + l {
            out.push(f64::NAN);
            continue;
        }
        let w = &codes[start..start + l];
        let mut fwd = 0.0;
        let mut rev = 0.0;
        for j in 0..l {
            fwd += rows[j][w[j] as usize];
            rev += rows[j][3 - w[l - 1 - j] as usize];
        }
        out.push(if rev > fwd { rev } else { fwd });
    }
    out
}

/// One indicator per window start: score strictly above `threshold`.
/// Windows touching an unscorable base are never hits.
pub fn hit_vector(matrix: &EnergyMatrix, codes: &[u8], threshold: f64) -> Result<Vec<bool>> {
    if codes.len() < matrix.len() {
        return Err(Error::SiteTooLong {
            site: matrix.len(),
            sequence: codes.len(),
        });
    }
    Ok(position_scores(matrix, codes)
        .into_iter()
        .map(|s| s > threshold)
        .collect())
}

/// Linear-interpolation quantile of finite values; NaN if there are none.
fn quantile(values: &mut [f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_unstable_by(f64::total_cmp);
    let h = q * (values.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    values[lo] + (h - lo as f64) * (values[hi] - values[lo])
}

fn median(values: &mut [f64]) -> f64 {
    quantile(values, 0.5)
}

/// Background threshold and the hit rate it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct NullThreshold {
    pub threshold: f64,
    /// Fraction of scorable background positions scoring above the threshold.
    pub hit_rate: f64,
    /// Per-sample quantiles, in sampling order.
    pub sample_quantiles: Vec<f64>,
    /// `(contig, start)` of each background window.
    pub windows: Vec<(String, usize)>,
}

/// Non-overlapping background tiles of length `2 * half_window` that avoid
/// excluded regions and unscorable bases, in (contig name, offset) order.
pub fn background_candidates(genome: &Genome, half_window: usize) -> Vec<(String, usize)> {
    let len = 2 * half_window;
    let mut contigs: Vec<&Contig> = genome.contigs().iter().collect();
    contigs.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = Vec::new();
    for c in contigs {
        let mut start = 0;
        while start + len <= c.len() {
            let scorable = !c.codes()[start..start + len].contains(&UNSCORABLE);
            if scorable && !genome.is_excluded(&c.name, start, start + len) {
                out.push((c.name.clone(), start));
            }
            start += len;
        }
    }
    out
}

/// Median over `n_background` random background windows of the per-window
/// upper quantile of position scores.
pub fn null_threshold(genome: &Genome, matrix: &EnergyMatrix, config: &ChipConfig) -> Result<NullThreshold> {
    config.validate()?;
    let len = 2 * config.half_window;
    if len < matrix.len() {
        return Err(Error::SiteTooLong {
            site: matrix.len(),
            sequence: len,
        });
    }
    let candidates = background_candidates(genome, config.half_window);
    if candidates.len() < config.n_background {
        return Err(Error::InsufficientBackground {
            available: candidates.len(),
            required: config.n_background,
        });
    }
    let mut rng = substream(config.seed, &[TAG_BACKGROUND]);
    let mut picks = sample(&mut rng, candidates.len(), config.n_background).into_vec();
    picks.sort_unstable();
    let windows: Vec<(String, usize)> = picks.into_iter().map(|i| candidates[i].clone()).collect();
    let q = config.upper_quantile();
    let scored: Vec<Vec<f64>> = windows
        .par_iter()
        .map(|(name, start)| {
            let c = genome.contig(name).expect("candidate contig exists");
            position_scores(matrix, &c.codes()[*start..*start + len])
        })
        .collect();
    let sample_quantiles: Vec<f64> = scored
        .iter()
        .map(|s| quantile(&mut s.iter().copied().filter(|v| !v.is_nan()).collect::<Vec<_>>(), q))
        .collect();
    let threshold = median(&mut sample_quantiles.clone());
    let (hits, total) = scored
        .iter()
        .flatten()
        .fold((0usize, 0usize), |(h, t), &s| (h + usize::from(s > threshold), t + 1));
    Ok(NullThreshold {
        threshold,
        hit_rate: hits as f64 / total as f64,
        sample_quantiles,
        windows,
    })
}

/// Centered moving average; the output is `width - 1` shorter than `v`.
pub fn moving_average(v: &[f64], width: usize) -> Result<Vec<f64>> {
    if width == 0 || width.is_multiple_of(2) {
        return Err(Error::invalid("moving-average width must be odd"));
    }
    if width > v.len() {
        return Err(Error::invalid(format!(
            "moving-average width {width} exceeds vector length {}",
            v.len()
        )));
    }
    Ok(v.windows(width).map(|w| w.iter().sum::<f64>() / width as f64).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnrichmentProfile {
    /// Position relative to the peak, for each value.
    pub positions: Vec<i64>,
    pub values: Vec<f64>,
    pub threshold: f64,
    /// Background hit rate used for normalization.
    pub null_hit_rate: f64,
    /// Set when no background position was a hit and a floor of one hit
    /// over all background positions was used instead.
    pub null_rate_floored: bool,
    pub peaks_used: usize,
    pub peaks_dropped: usize,
    pub config: ChipConfig,
}

impl EnrichmentProfile {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn value_at(&self, position: i64) -> Option<f64> {
        let first = *self.positions.first()?;
        let i = usize::try_from(position - first).ok()?;
        self.values.get(i).copied()
    }
}

/// Top `n` peaks by score (ties by contig, then position) whose windows fit
/// inside their contigs. Returns the peaks and the number dropped.
fn usable_peaks<'g>(
    genome: &'g Genome,
    peaks: &[Peak],
    config: &ChipConfig,
    l: usize,
) -> (Vec<(&'g Contig, usize)>, usize) {
    let mut ranked: Vec<&Peak> = peaks.iter().collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.contig.cmp(&b.contig))
            .then(a.position.cmp(&b.position))
    });
    let w = config.half_window;
    let mut used = Vec::new();
    let mut dropped = 0;
    for p in ranked {
        if used.len() == config.n_peaks {
            break;
        }
        let c = genome.contig(&p.contig).expect("peaks checked");
        if p.position < w || p.position + w + l > c.len() {
            log::warn!("peak {}:{} dropped: window leaves the contig", p.contig, p.position);
            dropped += 1;
            continue;
        }
        used.push((c, p.position - w));
    }
    (used, dropped)
}

/// Smoothed hit rate around the top peaks relative to the background rate.
pub fn enrichment_profile(
    genome: &Genome,
    peaks: &[Peak],
    matrix: &EnergyMatrix,
    config: &ChipConfig,
) -> Result<EnrichmentProfile> {
    let null = null_threshold(genome, matrix, config)?;
    enrichment_profile_with(genome, peaks, matrix, config, &null)
}

/// As [`enrichment_profile`] with a precomputed null threshold.
pub fn enrichment_profile_with(
    genome: &Genome,
    peaks: &[Peak],
    matrix: &EnergyMatrix,
    config: &ChipConfig,
    null: &NullThreshold,
) -> Result<EnrichmentProfile> {
    config.validate()?;
    genome.check_peaks(peaks)?;
    let l = matrix.len();
    let (used, dropped) = usable_peaks(genome, peaks, config, l);
    if used.is_empty() {
        return Err(Error::NoUsablePeaks { dropped });
    }
    let span = 2 * config.half_window + 1;
    let vectors: Vec<Vec<bool>> = used
        .par_iter()
        .map(|(c, start)| hit_vector(matrix, &c.codes()[*start..*start + span + l - 1], null.threshold))
        .collect::<Result<_>>()?;
    let mut counts = vec![0.0; span];
    for v in &vectors {
        for (c, &h) in counts.iter_mut().zip(v) {
            *c += f64::from(u8::from(h));
        }
    }
    let smoothed = moving_average(&counts, config.smoothing)?;
    let background_positions = null.windows.len() * (2 * config.half_window - l + 1);
    let floored = null.hit_rate == 0.0;
    let rate = if floored {
        1.0 / background_positions as f64
    } else {
        null.hit_rate
    };
    let scale = used.len() as f64 * rate;
    let margin = (config.smoothing / 2) as i64;
    let first = -(config.half_window as i64) + margin;
    Ok(EnrichmentProfile {
        positions: (0..smoothed.len() as i64).map(|i| first + i).collect(),
        values: smoothed.into_iter().map(|v| v / scale).collect(),
        threshold: null.threshold,
        null_hit_rate: rate,
        null_rate_floored: floored,
        peaks_used: used.len(),
        peaks_dropped: dropped,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::tests::table3;
    use crate::seq::Sequence;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codes(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..4u8)).collect()
    }

    fn genome(contigs: &[(&str, Vec<u8>)]) -> Genome {
        Genome::new(
            contigs
                .iter()
                .map(|(n, c)| Contig::new(*n, c.clone()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn small_config(seed: u64) -> ChipConfig {
        ChipConfig {
            n_peaks: 20,
            half_window: 200,
            n_background: 20,
            alpha: 0.99,
            smoothing: 21,
            seed,
        }
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[2.0; 7], 3).unwrap(), vec![2.0; 5]);
        let impulse = [0.0, 0.0, 1.0, 0.0, 0.0];
        let out = moving_average(&impulse, 3).unwrap();
        assert_eq!(out, vec![1.0 / 3.0; 3]);
        let ramp: Vec<f64> = (0..20).map(f64::from).collect();
        let out = moving_average(&ramp, 5).unwrap();
        for (i, v) in out.iter().enumerate() {
            assert!((v - ramp[i + 2]).abs() < 1e-12);
        }
        assert!(moving_average(&ramp, 4).is_err());
        assert!(moving_average(&ramp[..3], 5).is_err());
    }

    #[test]
    fn position_scores_take_the_better_strand() {
        let m = table3();
        let site = Sequence::parse("GGATTAGGGG").unwrap();
        let rc = site.reverse_complement();
        let mut codes = random_codes(40, 1);
        codes[10..20].copy_from_slice(rc.codes());
        let scores = position_scores(&m, &codes);
        assert_eq!(scores.len(), 31);
        assert_eq!(scores[10], 0.0);
        let mut masked = codes.clone();
        masked[15] = UNSCORABLE;
        let s = position_scores(&m, &masked);
        assert!(s[6..16].iter().all(|v| v.is_nan()));
        assert!(!s[5].is_nan() && !s[16].is_nan());
    }

    #[test]
    fn hit_vector_examples() {
        let m = table3();
        let codes = random_codes(300, 2);
        assert!(hit_vector(&m, &codes, f64::INFINITY).unwrap().iter().all(|h| !h));
        assert!(hit_vector(&m, &codes, -1e9).unwrap().iter().all(|&h| h));
        let mut planted = codes.clone();
        planted[100..110].copy_from_slice(Sequence::parse("GGATTAGGGG").unwrap().codes());
        let hits = hit_vector(&m, &planted, -0.5).unwrap();
        let on: Vec<usize> = hits.iter().enumerate().filter(|e| *e.1).map(|e| e.0).collect();
        assert_eq!(on, vec![100]);
        assert!(hit_vector(&m, &codes[..5], 0.0).is_err());
    }

    #[test]
    fn reverse_complement_mirrors_hits() {
        let m = table3();
        let codes = random_codes(500, 3);
        let rc: Vec<u8> = codes.iter().rev().map(|&b| 3 - b).collect();
        let a = hit_vector(&m, &codes, -12.0).unwrap();
        let mut b = hit_vector(&m, &rc, -12.0).unwrap();
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_scorer_threshold_is_zero() {
        let g = genome(&[("a", random_codes(20_000, 4))]);
        let m = EnergyMatrix::zeros(6).unwrap();
        let t = null_threshold(&g, &m, &small_config(1)).unwrap();
        assert_eq!(t.threshold, 0.0);
        assert_eq!(t.hit_rate, 0.0);
    }

    #[test]
    fn planted_two_value_quantile() {
        // One-position scorer: A or T scores 1, C or G scores 0. With 30% A/T
        // the 0.6 quantile is 0 and the 0.8 quantile is 1.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let codes: Vec<u8> = (0..40_000).map(|_| if rng.gen_bool(0.3) { 0 } else { 1 }).collect();
        let g = genome(&[("a", codes)]);
        let m = EnergyMatrix::new(vec![[1.0, 0.0, 0.0, 0.0]]).unwrap();
        let mut cfg = small_config(2);
        cfg.alpha = 0.6;
        assert_eq!(null_threshold(&g, &m, &cfg).unwrap().threshold, 0.0);
        cfg.alpha = 0.8;
        assert_eq!(null_threshold(&g, &m, &cfg).unwrap().threshold, 1.0);
        // Lower-tail spelling of the same level.
        cfg.alpha = 0.2;
        assert_eq!(null_threshold(&g, &m, &cfg).unwrap().threshold, 1.0);
    }

    #[test]
    fn threshold_is_monotone_in_alpha() {
        let g = genome(&[("a", random_codes(30_000, 6))]);
        let m = table3();
        let mut last = f64::NEG_INFINITY;
        for alpha in [0.6, 0.8, 0.9, 0.95, 0.99, 0.999] {
            let cfg = ChipConfig {
                alpha,
                ..small_config(3)
            };
            let t = null_threshold(&g, &m, &cfg).unwrap().threshold;
            assert!(t >= last, "{alpha}: {t} < {last}");
            last = t;
        }
    }

    #[test]
    fn background_respects_exclusions_and_masks() {
        let mut codes = random_codes(4000, 7);
        codes[1500] = UNSCORABLE;
        let mut g = genome(&[("b", codes), ("a", random_codes(1000, 8))]);
        g.exclude([Region {
            contig: "b".into(),
            start: 0,
            end: 10,
            label: "peak".into(),
        }])
        .unwrap();
        let c = background_candidates(&g, 200);
        // Tiles of 400: a has 2; b has 10, minus the excluded first and the masked fourth.
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], ("a".to_string(), 0));
        assert!(!c.contains(&("b".to_string(), 0)));
        assert!(!c.contains(&("b".to_string(), 1200)));
        let cfg = ChipConfig {
            n_background: 11,
            ..small_config(1)
        };
        assert!(matches!(
            null_threshold(&g, &table3(), &cfg),
            Err(Error::InsufficientBackground {
                available: 10,
                required: 11
            })
        ));
    }

    #[test]
    fn silent_scorer_gives_zero_profile() {
        let g = genome(&[("a", random_codes(60_000, 9))]);
        let peaks: Vec<Peak> = (0..20)
            .map(|i| Peak {
                contig: "a".into(),
                position: 1000 + 2500 * i,
                score: i as f64,
            })
            .collect();
        let m = EnergyMatrix::zeros(6).unwrap();
        let p = enrichment_profile(&g, &peaks, &m, &small_config(4)).unwrap();
        assert!(p.null_rate_floored);
        assert!(p.values.iter().all(|&v| v == 0.0));
        assert_eq!(p.values.len(), 401 - 20);
        assert_eq!(p.positions[0], -190);
    }

    #[test]
    fn out_of_bounds_peaks_are_dropped() {
        let g = genome(&[("a", random_codes(30_000, 10))]);
        let mut peaks = vec![
            Peak {
                contig: "a".into(),
                position: 50,
                score: 10.0,
            },
            Peak {
                contig: "a".into(),
                position: 29_990,
                score: 9.0,
            },
        ];
        let m = table3();
        let cfg = small_config(5);
        assert!(matches!(
            enrichment_profile(&g, &peaks, &m, &cfg),
            Err(Error::NoUsablePeaks { dropped: 2 })
        ));
        peaks.push(Peak {
            contig: "a".into(),
            position: 5000,
            score: 1.0,
        });
        let p = enrichment_profile(&g, &peaks, &m, &cfg).unwrap();
        assert_eq!((p.peaks_used, p.peaks_dropped), (1, 2));
        peaks.push(Peak {
            contig: "a".into(),
            position: 40_000,
            score: 1.0,
        });
        assert!(enrichment_profile(&g, &peaks, &m, &cfg).is_err());
    }

    #[test]
    fn profile_ignores_input_order() {
        let g1 = genome(&[("a", random_codes(50_000, 11)), ("b", random_codes(50_000, 12))]);
        let g2 = genome(&[("b", random_codes(50_000, 12)), ("a", random_codes(50_000, 11))]);
        let mut peaks: Vec<Peak> = (0..30)
            .map(|i| Peak {
                contig: if i % 2 == 0 { "a" } else { "b" }.into(),
                position: 500 + 1500 * i,
                score: (i % 7) as f64,
            })
            .collect();
        let m = table3();
        let cfg = small_config(6);
        let a = enrichment_profile(&g1, &peaks, &m, &cfg).unwrap();
        peaks.reverse();
        let b = enrichment_profile(&g2, &peaks, &m, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let ok = ChipConfig::new(1);
        assert!(ok.validate().is_ok());
        assert_eq!(ok.upper_quantile(), 0.999);
        assert_eq!(
            ChipConfig {
                alpha: 0.01,
                ..ok.clone()
            }
            .upper_quantile(),
            0.99
        );
        assert!(ChipConfig {
            alpha: 1.0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ChipConfig {
            smoothing: 200,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ChipConfig { n_peaks: 0, ..ok }.validate().is_err());
    }
}
