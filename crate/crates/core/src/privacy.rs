//! The private sample-and-aggregate estimator.
//!
//! The data are cut into `k` contiguous blocks, the bias-corrected MLE is
//! computed on each block (clamped to `Θ`), the block estimates are averaged
//! and Laplace noise of scale `Λ/(kε)` is added to the average. Changing a
//! single observation changes one block estimate by at most `Λ`, hence the
//! average by at most `Λ/k`, and the two output densities differ pointwise by
//! a factor of at most `e^ε`.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::bias_corrected_slice;
use crate::model::{Dataset, ParametricFamily};

/// Privacy level, block count and the resulting Laplace scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub k: usize,
    /// `Λ/(k·ε)`.
    pub lambda_scale: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, k: usize, diameter: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if k == 0 {
            return invalid("number of blocks k must be at least 1");
        }
        if !(diameter.is_finite() && diameter > 0.0) {
            return invalid(format!("diameter must be positive and finite, got {diameter}"));
        }
        Ok(Self {
            epsilon,
            k,
            lambda_scale: diameter / (k as f64 * epsilon),
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        invalid(format!("epsilon must be positive and finite, got {epsilon}"))
    }
}

/// How the number of blocks is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KChoice {
    /// `k = choose_k(n, ε, Λ)`.
    Auto,
    Fixed(usize),
}

impl KChoice {
    pub fn resolve(&self, n: usize, epsilon: f64, diameter: f64) -> Result<usize> {
        match *self {
            KChoice::Auto => choose_k(n, epsilon, diameter),
            KChoice::Fixed(k) => {
                if k == 0 || k > n {
                    invalid(format!("k = {k} must satisfy 1 <= k <= n = {n}"))
                } else {
                    Ok(k)
                }
            }
        }
    }
}

impl std::fmt::Display for KChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KChoice::Auto => f.write_str("auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for KChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(KChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KChoice::Fixed(k)),
            _ => invalid(format!("k must be `auto` or a positive integer, got `{s}`")),
        }
    }
}

/// Number of blocks balancing estimator bias against noise variance:
/// `min(n, max(1, ⌈n^(3/5) Λ^(2/5) / ε^(2/5)⌉))`.
pub fn choose_k(n: usize, epsilon: f64, diameter: f64) -> Result<usize> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    check_epsilon(epsilon)?;
    if !(diameter.is_finite() && diameter > 0.0) {
        return invalid(format!("diameter must be positive and finite, got {diameter}"));
    }
    let raw = ((n as f64).powf(0.6) * (diameter / epsilon).powf(0.4)).ceil();
    // Saturating float-to-int cast handles raw > usize::MAX.
    Ok((raw as usize).clamp(1, n))
}

/// Sizes of the `k` blocks of an `n`-point dataset: the first `n mod k`
/// blocks hold `⌊n/k⌋ + 1` points, the rest `⌊n/k⌋`.
pub fn block_sizes(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return invalid(format!("k = {k} must satisfy 1 <= k <= n = {n}"));
    }
    let (t, r) = (n / k, n % k);
    Ok((0..k).map(|j| if j < r { t + 1 } else { t }).collect())
}

/// Splits the data into `k` disjoint contiguous blocks covering every point.
pub fn partition(data: &Dataset, k: usize) -> Result<Vec<&[f64]>> {
    let sizes = block_sizes(data.len(), k)?;
    let mut rest = data.as_slice();
    Ok(sizes
        .into_iter()
        .map(|t| {
            let (head, tail) = rest.split_at(t);
            rest = tail;
            head
        })
        .collect())
}

/// Inverse CDF of the centered Laplace distribution at `u ∈ (0, 1)`.
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// One draw from `Lap(scale)`, density `e^(−|y|/scale) / (2·scale)`.
///
/// Consumes exactly one uniform from `rng`.
pub fn laplace_draw<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return invalid(format!("Laplace scale must be positive and finite, got {scale}"));
    }
    let u: f64 = rng.sample(Open01);
    // The median maps to +0 rather than -0.
    Ok(laplace_from_uniform(u, scale) + 0.0)
}

/// Analytic CDF of `Lap(scale)`.
pub fn laplace_cdf(y: f64, scale: f64) -> f64 {
    if y < 0.0 {
        0.5 * (y / scale).exp()
    } else {
        1.0 - 0.5 * (-y / scale).exp()
    }
}

/// The complete record of one run of the private estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateEstimate {
    pub block_estimates: Vec<f64>,
    /// Mean of the block estimates (the unperturbed statistic).
    pub average: f64,
    pub noise: f64,
    /// `average + noise`.
    pub output: f64,
    pub params: PrivacyParams,
    /// Nominal block size `⌊n/k⌋`; the first `n mod k` blocks hold one more.
    pub block_size: usize,
}

impl PrivateEstimate {
    /// The output projected onto `Θ`. Deterministic post-processing, so it
    /// keeps the privacy guarantee.
    pub fn clamped_output(&self, family: &ParametricFamily) -> f64 {
        family.space().clamp(self.output)
    }
}

/// Per-block bias-corrected estimates (clamped to `Θ`).
pub fn block_estimates(family: &ParametricFamily, data: &Dataset, k: usize) -> Result<Vec<f64>> {
    family.check_data(data)?;
    partition(data, k)?
        .into_iter()
        .enumerate()
        .map(|(j, block)| match bias_corrected_slice(family, block) {
            Ok(est) => Ok(est.value),
            Err(Error::DegenerateData { reason, .. }) => Err(Error::DegenerateData { block: Some(j), reason }),
            Err(e) => Err(e),
        })
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// The noiseless part of the estimator: the average of the block estimates.
pub fn noiseless_average(family: &ParametricFamily, data: &Dataset, k: usize) -> Result<f64> {
    Ok(mean(&block_estimates(family, data, k)?))
}

/// Runs the private estimator. The only randomness consumed from `rng` is a
/// single Laplace draw, so the noise for a given stream position does not
/// depend on the data.
pub fn sample_aggregate<R: Rng + ?Sized>(
    family: &ParametricFamily,
    data: &Dataset,
    epsilon: f64,
    k: KChoice,
    rng: &mut R,
) -> Result<PrivateEstimate> {
    let diameter = family.space().diameter();
    check_epsilon(epsilon)?;
    let k = k.resolve(data.len(), epsilon, diameter)?;
    let params = PrivacyParams::new(epsilon, k, diameter)?;
    let block_estimates = block_estimates(family, data, k)?;
    let average = mean(&block_estimates);
    let noise = laplace_draw(params.lambda_scale, rng)?;
    Ok(PrivateEstimate {
        block_estimates,
        average,
        noise,
        output: average + noise,
        params,
        block_size: data.len() / k,
    })
}

/// Checks that `x` and `x_prime` have equal length and differ in exactly one
/// position; returns that position.
pub fn neighbor_index(x: &Dataset, x_prime: &Dataset) -> Result<usize> {
    if x.len() != x_prime.len() {
        return Err(Error::NotNeighbors(format!("lengths differ ({} vs {})", x.len(), x_prime.len())));
    }
    let mut diffs = x.iter().zip(x_prime.iter()).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i);
    match (diffs.next(), diffs.next()) {
        (Some(i), None) => Ok(i),
        (None, _) => Err(Error::NotNeighbors("datasets are identical".into())),
        (Some(i), Some(j)) => Err(Error::NotNeighbors(format!("positions {i} and {j} both differ"))),
    }
}

/// `|z̄(x) − z̄(x′)|` for a neighboring pair, computed without noise.
pub fn average_sensitivity(family: &ParametricFamily, x: &Dataset, x_prime: &Dataset, k: usize) -> Result<f64> {
    neighbor_index(x, x_prime)?;
    Ok((noiseless_average(family, x, k)? - noiseless_average(family, x_prime, k)?).abs())
}

/// `ln` of the ratio of the `Lap(zbar, λ)` and `Lap(zbar′, λ)` densities at `y`.
pub fn log_density_ratio(zbar: f64, zbar_prime: f64, lambda_scale: f64, y: f64) -> f64 {
    ((y - zbar_prime).abs() - (y - zbar).abs()) / lambda_scale
}

/// Ratio of the output densities at `y` when the unperturbed averages are
/// `zbar` and `zbar_prime`.
pub fn density_ratio_bound(zbar: f64, zbar_prime: f64, params: &PrivacyParams, y: f64) -> f64 {
    log_density_ratio(zbar, zbar_prime, params.lambda_scale, y).exp()
}
