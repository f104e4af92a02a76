//! Randomized privacy audit over neighboring datasets.
//!
//! Each audited pair starts from a dataset drawn at a uniformly random `θ ∈ Θ`.
//! One random position is given three values: the original observation and
//! the two extremes of the observation domain. Every pair of those values
//! forms a neighboring pair `(x, x′)`. For each pair the audit records the
//! sensitivity ratio `|z̄(x) − z̄(x′)|·k/Λ` and the worst absolute log
//! density ratio of the two noisy outputs over a `y` grid spanning
//! `z̄(x) ± 10λ`. Beyond both centers the log ratio is constant and equals
//! `±|Δz̄|/λ`, so the grid endpoints capture the extremes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Dataset, ParametricFamily};
use crate::privacy::{log_density_ratio, neighbor_index, noiseless_average, PrivacyParams};
use crate::rng::{derive_seed, stream};

/// Slack allowed on both audit bounds.
const AUDIT_SLACK: f64 = 1e-9;

/// Half-width of the `y` grid in units of the Laplace scale.
const GRID_HALF_WIDTH: f64 = 10.0;

/// A neighboring pair, serialized in full for reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPair {
    pub pair_index: usize,
    /// Seed of the stream that generated the base dataset.
    pub pair_seed: u64,
    /// Position where `x` and `x′` differ.
    pub position: usize,
    /// The first dataset.
    pub x: Vec<f64>,
    /// Value of `x′` at `position`; elsewhere `x′ = x`.
    pub x_prime_value: f64,
    pub zbar: f64,
    pub zbar_prime: f64,
    pub sensitivity_ratio: f64,
    pub abs_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpAuditReport {
    pub pairs_tested: usize,
    /// `max |Δz̄|·k/Λ`.
    pub max_sensitivity_ratio: f64,
    /// Worst pointwise `|ln(density ratio)|`.
    pub max_abs_log_ratio: f64,
    pub epsilon_target: f64,
    pub pass: bool,
    /// The pair attaining `max_abs_log_ratio` (ties go to the earliest pair).
    pub worst_pair: Option<AuditPair>,
}

#[derive(Debug, Clone, Copy)]
struct Comparison {
    pair_index: usize,
    pair_seed: u64,
    position: usize,
    a: f64,
    b: f64,
    zbar: f64,
    zbar_prime: f64,
    sensitivity_ratio: f64,
    abs_log_ratio: f64,
}

struct AuditSetup<'a> {
    family: &'a ParametricFamily,
    n: usize,
    k: usize,
    diameter: f64,
    scale: f64,
    grid: Vec<f64>,
}

impl AuditSetup<'_> {
    /// Base dataset and audited position for one pair stream.
    fn base(&self, pair_seed: u64) -> Result<(Dataset, usize)> {
        let mut rng = stream(pair_seed);
        let space = self.family.space();
        let theta = space.clamp(space.lower() + space.diameter() * rng.gen::<f64>());
        let x = self.family.sample(theta, self.n, &mut rng)?;
        let position = rng.gen_range(0..self.n);
        Ok((x, position))
    }

    fn compare(&self, pair_index: usize, pair_seed: u64, x: &Dataset, position: usize, a: f64, b: f64) -> Result<Comparison> {
        let mut c = Comparison {
            pair_index,
            pair_seed,
            position,
            a,
            b,
            zbar: 0.0,
            zbar_prime: 0.0,
            sensitivity_ratio: 0.0,
            abs_log_ratio: 0.0,
        };
        let xa = x.with_replaced(position, a)?;
        if a == b {
            // Identical outputs: nothing to audit.
            c.zbar = noiseless_average(self.family, &xa, self.k)?;
            c.zbar_prime = c.zbar;
            return Ok(c);
        }
        let xb = x.with_replaced(position, b)?;
        neighbor_index(&xa, &xb)?;
        c.zbar = noiseless_average(self.family, &xa, self.k)?;
        c.zbar_prime = noiseless_average(self.family, &xb, self.k)?;
        c.sensitivity_ratio = (c.zbar - c.zbar_prime).abs() * self.k as f64 / self.diameter;
        c.abs_log_ratio = self
            .grid
            .iter()
            .map(|&offset| log_density_ratio(c.zbar, c.zbar_prime, self.scale, c.zbar + offset).abs())
            .fold(0.0, f64::max);
        Ok(c)
    }

    fn audit_pair(&self, pair_index: usize, pair_seed: u64) -> Result<[Comparison; 3]> {
        let (x, position) = self.base(pair_seed)?;
        let original = x.as_slice()[position];
        let (lo, hi) = self.family.observation_extremes();
        Ok([
            self.compare(pair_index, pair_seed, &x, position, original, lo)?,
            self.compare(pair_index, pair_seed, &x, position, original, hi)?,
            self.compare(pair_index, pair_seed, &x, position, lo, hi)?,
        ])
    }
}

/// Audits the privacy guarantee of the estimator with `k` blocks at level
/// `epsilon` on `pairs` random base datasets of size `n` (three neighboring
/// pairs each).
pub fn dp_audit<R: Rng + ?Sized>(
    family: &ParametricFamily,
    n: usize,
    epsilon: f64,
    k: usize,
    pairs: usize,
    y_grid_size: usize,
    rng: &mut R,
) -> Result<DpAuditReport> {
    dp_audit_with_scale(family, n, epsilon, k, pairs, y_grid_size, None, rng)
}

/// [`dp_audit`] with the Laplace scale optionally replaced by `scale_override`.
/// A scale below `Λ/(kε)` breaks the guarantee; the audit must then fail.
#[allow(clippy::too_many_arguments)]
pub fn dp_audit_with_scale<R: Rng + ?Sized>(
    family: &ParametricFamily,
    n: usize,
    epsilon: f64,
    k: usize,
    pairs: usize,
    y_grid_size: usize,
    scale_override: Option<f64>,
    rng: &mut R,
) -> Result<DpAuditReport> {
    if pairs == 0 {
        return invalid("pairs must be at least 1");
    }
    if k == 0 || k > n {
        return invalid(format!("k = {k} must satisfy 1 <= k <= n = {n}"));
    }
    if y_grid_size < 2 {
        return invalid("the y grid needs at least 2 points");
    }
    let diameter = family.space().diameter();
    let params = PrivacyParams::new(epsilon, k, diameter)?;
    let scale = match scale_override {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(s) => return invalid(format!("noise scale override must be positive, got {s}")),
        None => params.lambda_scale,
    };
    let half = GRID_HALF_WIDTH * scale;
    let grid = (0..y_grid_size)
        .map(|j| -half + 2.0 * half * j as f64 / (y_grid_size - 1) as f64)
        .collect();
    let setup = AuditSetup {
        family,
        n,
        k,
        diameter,
        scale,
        grid,
    };

    let base_seed = rng.next_u64();
    let results = (0..pairs)
        .into_par_iter()
        .map(|p| setup.audit_pair(p, derive_seed(base_seed, &[p as u64])))
        .collect::<Result<Vec<_>>>()?;

    let mut max_sensitivity_ratio: f64 = 0.0;
    let mut worst: Option<Comparison> = None;
    for c in results.iter().flatten() {
        max_sensitivity_ratio = max_sensitivity_ratio.max(c.sensitivity_ratio);
        if worst.is_none_or(|w| c.abs_log_ratio > w.abs_log_ratio) {
            worst = Some(*c);
        }
    }
    let worst = worst.expect("at least one pair");
    let max_abs_log_ratio = worst.abs_log_ratio;
    let (x, _) = setup.base(worst.pair_seed)?;
    let worst_pair = AuditPair {
        pair_index: worst.pair_index,
        pair_seed: worst.pair_seed,
        position: worst.position,
        x: x.with_replaced(worst.position, worst.a)?.into_vec(),
        x_prime_value: worst.b,
        zbar: worst.zbar,
        zbar_prime: worst.zbar_prime,
        sensitivity_ratio: worst.sensitivity_ratio,
        abs_log_ratio: worst.abs_log_ratio,
    };

    Ok(DpAuditReport {
        pairs_tested: results.len() * 3,
        max_sensitivity_ratio,
        max_abs_log_ratio,
        epsilon_target: epsilon,
        pass: max_sensitivity_ratio <= 1.0 + AUDIT_SLACK && max_abs_log_ratio <= epsilon + AUDIT_SLACK,
        worst_pair: Some(worst_pair),
    })
}
