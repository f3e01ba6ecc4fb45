//! Downhill simplex (Nelder-Mead) maximizer.

/// Simplex coefficients and stopping rules.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexConfig {
    /// Stop once `max f - min f` over the vertices falls below this
    pub f_tol: f64,
    /// and every vertex lies within this distance (per coordinate) of the best.
    pub x_tol: f64,
    pub max_iter: usize,
    /// Offset along each axis used to build the initial simplex.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig {
            f_tol: 1e-8,
            x_tol: 1e-6,
            max_iter: 50_000,
            initial_step: 1.0,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.f_tol > 0.0 && self.x_tol > 0.0) {
            return Err("simplex tolerances must be positive".into());
        }
        if !(self.initial_step.is_finite() && self.initial_step != 0.0) {
            return Err("initial simplex step must be finite and non-zero".into());
        }
        if self.max_iter == 0 {
            return Err("iteration cap must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximizes `f` from `start`. Non-finite objective values are treated as
/// worse than any finite value.
pub fn nelder_mead<F>(mut f: F, start: &[f64], cfg: &SimplexConfig) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    // Internally minimize the negated objective.
    let mut cost = |x: &[f64]| {
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += cfg.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| cost(v)).collect();
    let mut evaluations = n + 1;

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial_r = vec![0.0; n];
    let mut trial_e = vec![0.0; n];
    let mut trial_c = vec![0.0; n];

    let mut iterations = 0;
    let mut converged = false;
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];

        let f_spread = (values[worst] - values[best]).abs();
        let x_spread = simplex
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if n == 0 || (f_spread <= cfg.f_tol && x_spread <= cfg.x_tol) {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let second_worst = order[n - 1];
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        for j in 0..n {
            trial_r[j] = centroid[j] + cfg.reflection * (centroid[j] - simplex[worst][j]);
        }
        let f_r = cost(&trial_r);
        evaluations += 1;

        if f_r < values[best] {
            for j in 0..n {
                trial_e[j] = centroid[j] + cfg.expansion * (trial_r[j] - centroid[j]);
            }
            let f_e = cost(&trial_e);
            evaluations += 1;
            if f_e < f_r {
                simplex[worst].copy_from_slice(&trial_e);
                values[worst] = f_e;
            } else {
                simplex[worst].copy_from_slice(&trial_r);
                values[worst] = f_r;
            }
            continue;
        }
        if f_r < values[second_worst] {
            simplex[worst].copy_from_slice(&trial_r);
            values[worst] = f_r;
            continue;
        }

        let outside = f_r < values[worst];
        for j in 0..n {
            trial_c[j] = if outside {
                centroid[j] + cfg.contraction * (trial_r[j] - centroid[j])
            } else {
                centroid[j] + cfg.contraction * (simplex[worst][j] - centroid[j])
            };
        }
        let f_c = cost(&trial_c);
        evaluations += 1;
        let accept = if outside { f_c <= f_r } else { f_c < values[worst] };
        if accept {
            simplex[worst].copy_from_slice(&trial_c);
            values[worst] = f_c;
            continue;
        }

        let anchor = simplex[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + cfg.shrink * (*x - a);
            }
            values[i] = cost(&simplex[i]);
            evaluations += 1;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    SimplexOutcome {
        point: simplex[best].clone(),
        value: -values[best],
        iterations,
        evaluations,
        converged,
    }
}
