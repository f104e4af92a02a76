//! Monte Carlo experiments and privacy audits.
//!
//! [`run_trials`] measures the mean squared error `J_T(θ) = E_θ[(T − θ)²]`,
//! bias, variance and relative efficiency `n·I_f(θ)·J_T(θ)` of an estimator
//! over independent replications. Each replication draws its data and its
//! noise from streams derived from `(seed, n, trial)`, and moments are summed
//! in trial order, so results are identical for any number of worker threads.
//! Parallel work runs on the current rayon pool; use [`with_workers`] to pin
//! the pool size.

mod audit;

pub use audit::{dp_audit, dp_audit_with_scale, AuditPair, DpAuditReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimator::{bias_corrected_slice, mle_slice};
use crate::model::{Dataset, FamilyKind, ParametricFamily};
use crate::privacy::{block_estimates, block_sizes, sample_aggregate, KChoice, PrivateEstimate};
use crate::rng::{derive_seed, stream, DATA_STREAM, NOISE_STREAM};

/// Resampling attempts allowed for one trial before giving up.
const MAX_RESAMPLES: u32 = 1000;

/// Which estimator an experiment evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// MLE on the full dataset.
    Mle,
    /// Bias-corrected MLE on the full dataset.
    BiasCorrected,
    /// Average of per-block bias-corrected MLEs, without noise.
    BlockAverage,
    /// The private sample-and-aggregate estimator.
    Private,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::BiasCorrected => "bias_corrected",
            EstimatorKind::BlockAverage => "block_average",
            EstimatorKind::Private => "private",
        }
    }

    fn uses_blocks(&self) -> bool {
        matches!(self, EstimatorKind::BlockAverage | EstimatorKind::Private)
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(EstimatorKind::Mle),
            "bias_corrected" => Ok(EstimatorKind::BiasCorrected),
            "block_average" => Ok(EstimatorKind::BlockAverage),
            "private" => Ok(EstimatorKind::Private),
            other => invalid(format!(
                "unknown estimator `{other}` (expected mle, bias_corrected, block_average or private)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: ParametricFamily,
    pub theta_true: f64,
    pub n_grid: Vec<usize>,
    pub epsilon: f64,
    pub k_policy: KChoice,
    pub trials: usize,
    pub seed: u64,
    pub estimator_kind: EstimatorKind,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.family.space().contains(self.theta_true) {
            return invalid(format!("theta_true = {} lies outside the parameter space", self.theta_true));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.n_grid.is_empty() {
            return invalid("n_grid must not be empty");
        }
        if self.n_grid[0] == 0 {
            return invalid("sample sizes must be at least 1");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_grid must be strictly increasing");
        }
        if self.estimator_kind.uses_blocks() {
            if self.estimator_kind == EstimatorKind::Private && !(self.epsilon.is_finite() && self.epsilon > 0.0) {
                return invalid(format!("epsilon must be positive and finite, got {}", self.epsilon));
            }
            for &n in &self.n_grid {
                self.resolve_k(n)?;
            }
        }
        Ok(())
    }

    /// Number of blocks used at sample size `n`, or `None` for full-data estimators.
    pub fn k_for(&self, n: usize) -> Result<Option<usize>> {
        if self.estimator_kind.uses_blocks() {
            self.resolve_k(n).map(Some)
        } else {
            Ok(None)
        }
    }

    fn resolve_k(&self, n: usize) -> Result<usize> {
        // The noiseless block average still needs an ε when k is automatic.
        self.k_policy.resolve(n, self.epsilon, self.family.space().diameter())
    }
}

/// Result of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// `T − θ`.
    pub error: f64,
    /// Injected Laplace noise (0 for non-private estimators).
    pub noise: f64,
    /// Number of datasets discarded as degenerate before this one.
    pub resamples: u32,
}

/// All replications at one sample size, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub n: usize,
    pub k: Option<usize>,
    pub outcomes: Vec<TrialOutcome>,
}

/// Summary statistics at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub n: usize,
    pub k: Option<usize>,
    pub trials: usize,
    /// Mean of squared errors.
    pub mse: f64,
    pub bias: f64,
    /// Mean squared deviation of the errors from `bias`.
    pub variance: f64,
    /// `n·I_f(θ)·mse`.
    pub relative_efficiency: f64,
    /// Analytic MSE ignoring clamping, where a closed form exists.
    pub predicted_mse: Option<f64>,
    /// Sample standard deviation of squared errors over `√trials`; NaN for one trial.
    pub standard_error_of_mse: f64,
    pub resamples: u64,
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return invalid("workers must be at least 1");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Seed of the data stream for `(n, trial)` on the given resampling attempt.
pub fn data_seed(seed: u64, n: usize, trial: u64, attempt: u32) -> u64 {
    derive_seed(seed, &[DATA_STREAM, n as u64, trial, u64::from(attempt)])
}

/// Seed of the noise stream for `(n, trial)`.
pub fn noise_seed(seed: u64, n: usize, trial: u64) -> u64 {
    derive_seed(seed, &[NOISE_STREAM, n as u64, trial])
}

/// Runs the private estimator on `data` with the noise stream of trial 0 at
/// sample size `data.len()`.
pub fn seeded_private_estimate(
    family: &ParametricFamily,
    data: &Dataset,
    epsilon: f64,
    k: KChoice,
    seed: u64,
) -> Result<PrivateEstimate> {
    sample_aggregate(family, data, epsilon, k, &mut stream(noise_seed(seed, data.len(), 0)))
}

/// Draws the trial-0 dataset at `(theta, n)` and runs the private estimator on
/// it: the same data and noise as the first replication of a private
/// experiment with this seed.
pub fn synthetic_private_estimate(
    family: &ParametricFamily,
    theta: f64,
    n: usize,
    epsilon: f64,
    k: KChoice,
    seed: u64,
) -> Result<(Dataset, PrivateEstimate)> {
    let data = family.sample(theta, n, &mut stream(data_seed(seed, n, 0, 0)))?;
    let est = seeded_private_estimate(family, &data, epsilon, k, seed)?;
    Ok((data, est))
}

fn run_one(config: &ExperimentConfig, n: usize, k: Option<usize>, trial: u64) -> Result<TrialOutcome> {
    let family = &config.family;
    let mut resamples = 0;
    loop {
        let data = family.sample(config.theta_true, n, &mut stream(data_seed(config.seed, n, trial, resamples)))?;
        let result = match (config.estimator_kind, k) {
            (EstimatorKind::Mle, _) => mle_slice(family, data.as_slice()).map(|e| (e.value, 0.0)),
            (EstimatorKind::BiasCorrected, _) => bias_corrected_slice(family, data.as_slice()).map(|e| (e.value, 0.0)),
            (EstimatorKind::BlockAverage, Some(k)) => block_estimates(family, &data, k)
                .map(|z| (z.iter().sum::<f64>() / z.len() as f64, 0.0)),
            (EstimatorKind::Private, Some(k)) => {
                let mut noise_rng = stream(noise_seed(config.seed, n, trial));
                sample_aggregate(family, &data, config.epsilon, KChoice::Fixed(k), &mut noise_rng)
                    .map(|e| (e.output, e.noise))
            }
            (kind, None) => unreachable!("{kind} requires a block count"),
        };
        match result {
            Ok((value, noise)) => {
                return Ok(TrialOutcome {
                    error: value - config.theta_true,
                    noise,
                    resamples,
                })
            }
            Err(Error::DegenerateData { .. }) if resamples < MAX_RESAMPLES => resamples += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Runs every replication at sample size `n`.
pub fn trial_outcomes(config: &ExperimentConfig, n: usize) -> Result<TrialBatch> {
    config.validate()?;
    let k = config.k_for(n)?;
    let outcomes = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| run_one(config, n, k, trial))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialBatch { n, k, outcomes })
}

/// Summarizes a batch. Sums run in trial order.
pub fn summarize(config: &ExperimentConfig, batch: &TrialBatch) -> Result<TrialStats> {
    let m = batch.outcomes.len() as f64;
    let errors = || batch.outcomes.iter().map(|o| o.error);
    let bias = errors().sum::<f64>() / m;
    let mse = errors().map(|e| e * e).sum::<f64>() / m;
    let variance = errors().map(|e| (e - bias) * (e - bias)).sum::<f64>() / m;
    let standard_error_of_mse = if batch.outcomes.len() > 1 {
        let ss = errors().map(|e| (e * e - mse) * (e * e - mse)).sum::<f64>();
        (ss / (m - 1.0)).sqrt() / m.sqrt()
    } else {
        f64::NAN
    };
    let info = config.family.fisher_information(config.theta_true)?;
    Ok(TrialStats {
        n: batch.n,
        k: batch.k,
        trials: batch.outcomes.len(),
        mse,
        bias,
        variance,
        relative_efficiency: batch.n as f64 * info * mse,
        predicted_mse: predicted_mse(config, batch.n, batch.k),
        standard_error_of_mse,
        resamples: batch.outcomes.iter().map(|o| u64::from(o.resamples)).sum(),
    })
}

/// Runs the experiment at every sample size of the grid.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialStats>> {
    config.validate()?;
    config
        .n_grid
        .iter()
        .map(|&n| summarize(config, &trial_outcomes(config, n)?))
        .collect()
}

/// Relative efficiency of the private estimator along the sample-size grid.
pub fn efficiency_curve(config: &ExperimentConfig) -> Result<Vec<(usize, f64)>> {
    if config.estimator_kind != EstimatorKind::Private {
        return invalid("efficiency_curve needs the private estimator");
    }
    if config.n_grid.len() < 3 {
        return invalid("efficiency_curve needs at least 3 sample sizes");
    }
    Ok(run_trials(config)?.into_iter().map(|s| (s.n, s.relative_efficiency)).collect())
}

/// Exact bias and variance of a full-data estimator on `t` points, when known.
fn estimator_moments(family: &ParametricFamily, theta: f64, t: usize, corrected: bool) -> Option<(f64, f64)> {
    let t = t as f64;
    match family.kind() {
        FamilyKind::Bernoulli => Some((0.0, theta * (1.0 - theta) / t)),
        FamilyKind::GaussianKnownVariance { sigma } => Some((0.0, sigma * sigma / t)),
        // t·X̄·λ ~ Gamma(t, 1): E[1/X̄] = tλ/(t−1), Var[1/X̄] = t²λ²/((t−1)²(t−2)).
        FamilyKind::ExponentialRate if t > 2.0 => {
            if corrected {
                Some((0.0, theta * theta / (t - 2.0)))
            } else {
                Some((theta / (t - 1.0), t * t * theta * theta / ((t - 1.0) * (t - 1.0) * (t - 2.0))))
            }
        }
        FamilyKind::ExponentialRate => None,
    }
}

/// Analytic MSE of the configured estimator at sample size `n`, ignoring clamping.
///
/// For the block estimators the bias is the mean of the block biases, the
/// variance is `Σ Var(z_j) / k²`, and the private estimator adds the Laplace
/// variance `2(Λ/(kε))²`.
pub fn predicted_mse(config: &ExperimentConfig, n: usize, k: Option<usize>) -> Option<f64> {
    let (family, theta) = (&config.family, config.theta_true);
    match (config.estimator_kind, k) {
        (EstimatorKind::Mle, _) => estimator_moments(family, theta, n, false).map(|(b, v)| v + b * b),
        (EstimatorKind::BiasCorrected, _) => estimator_moments(family, theta, n, true).map(|(b, v)| v + b * b),
        (kind, Some(k)) => {
            let sizes = block_sizes(n, k).ok()?;
            let moments = sizes
                .iter()
                .map(|&t| estimator_moments(family, theta, t, true))
                .collect::<Option<Vec<_>>>()?;
            let kf = k as f64;
            let bias = moments.iter().map(|m| m.0).sum::<f64>() / kf;
            let var = moments.iter().map(|m| m.1).sum::<f64>() / (kf * kf);
            let noise = if kind == EstimatorKind::Private {
                let scale = family.space().diameter() / (kf * config.epsilon);
                2.0 * scale * scale
            } else {
                0.0
            };
            Some(var + bias * bias + noise)
        }
        (_, None) => None,
    }
}
