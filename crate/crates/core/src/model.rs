//! One-parameter families `f(x; θ)` on bounded parameter spaces.
//!
//! Three families are provided, each with a closed-form MLE, an analytic
//! Fisher information and a known leading bias coefficient:
//!
//! | id                   | observations | `I_f(θ)`        |
//! |----------------------|--------------|-----------------|
//! | `bernoulli`          | `{0, 1}`     | `1/(θ(1−θ))`    |
//! | `gaussian_fixed_var` | `ℝ`          | `1/σ²`          |
//! | `exponential_rate`   | `[0, ∞)`     | `1/λ²`          |
//!
//! Sampling is by inversion from the uniform stream for the Bernoulli and
//! exponential families. Gaussian draws use the Box–Muller transform, both
//! outputs of each uniform pair being used in order (cosine then sine), so a
//! seed reproduces the same dataset on every run of the same build.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};

/// Closed parameter interval `Θ = [lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    lower: f64,
    upper: f64,
}

impl ParameterSpace {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return invalid(format!("parameter space bounds must be finite, got [{lower}, {upper}]"));
        }
        if lower >= upper {
            return invalid(format!("parameter space needs lower < upper, got [{lower}, {upper}]"));
        }
        if !(upper - lower).is_finite() {
            return invalid("parameter space diameter overflows");
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// The diameter `Λ = upper − lower`.
    pub fn diameter(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lower && theta <= self.upper
    }

    /// Projects `value` onto the interval. NaN is not expected here.
    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.lower, self.upper)
    }

    fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            domain(format!(
                "theta = {theta} lies outside the parameter space [{}, {}]",
                self.lower, self.upper
            ))
        }
    }
}

/// Identifier of a family, as used on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    Bernoulli,
    GaussianFixedVar,
    ExponentialRate,
}

impl FamilyId {
    pub const ALL: [FamilyId; 3] = [FamilyId::Bernoulli, FamilyId::GaussianFixedVar, FamilyId::ExponentialRate];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyId::Bernoulli => "bernoulli",
            FamilyId::GaussianFixedVar => "gaussian_fixed_var",
            FamilyId::ExponentialRate => "exponential_rate",
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(FamilyId::Bernoulli),
            "gaussian_fixed_var" => Ok(FamilyId::GaussianFixedVar),
            "exponential_rate" => Ok(FamilyId::ExponentialRate),
            other => invalid(format!(
                "unknown model `{other}` (expected bernoulli, gaussian_fixed_var or exponential_rate)"
            )),
        }
    }
}

/// The distributional form of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyKind {
    Bernoulli,
    GaussianKnownVariance { sigma: f64 },
    ExponentialRate,
}

/// A one-parameter model `f(·; θ)` together with its parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricFamily {
    kind: FamilyKind,
    space: ParameterSpace,
}

impl ParametricFamily {
    /// Margin `δ` of the shipped Bernoulli space `[δ, 1−δ]`.
    pub const DEFAULT_BERNOULLI_MARGIN: f64 = 0.01;
    /// Shipped exponential rate space `[λ_min, λ_max]`.
    pub const DEFAULT_RATE_RANGE: (f64, f64) = (0.1, 10.0);
    /// Shipped Gaussian mean space.
    pub const DEFAULT_GAUSSIAN_RANGE: (f64, f64) = (0.0, 1.0);

    pub fn new(kind: FamilyKind, space: ParameterSpace) -> Result<Self> {
        match kind {
            FamilyKind::Bernoulli => {
                if space.lower < 0.0 || space.upper > 1.0 {
                    return invalid(format!(
                        "Bernoulli parameter space [{}, {}] must lie within [0, 1]",
                        space.lower, space.upper
                    ));
                }
            }
            FamilyKind::GaussianKnownVariance { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return invalid(format!("Gaussian sigma must be positive and finite, got {sigma}"));
                }
            }
            FamilyKind::ExponentialRate => {
                if space.lower <= 0.0 {
                    return invalid(format!("exponential rate space needs lambda_min > 0, got {}", space.lower));
                }
            }
        }
        Ok(Self { kind, space })
    }

    /// Bernoulli on an explicit space inside `[0, 1]`.
    pub fn bernoulli(space: ParameterSpace) -> Result<Self> {
        Self::new(FamilyKind::Bernoulli, space)
    }

    /// Bernoulli on `[δ, 1−δ]`.
    pub fn bernoulli_with_margin(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return invalid(format!("Bernoulli margin must lie in (0, 0.5), got {delta}"));
        }
        Self::bernoulli(ParameterSpace::new(delta, 1.0 - delta)?)
    }

    pub fn gaussian(sigma: f64, space: ParameterSpace) -> Result<Self> {
        Self::new(FamilyKind::GaussianKnownVariance { sigma }, space)
    }

    pub fn exponential_rate(space: ParameterSpace) -> Result<Self> {
        Self::new(FamilyKind::ExponentialRate, space)
    }

    /// The shipped configuration of a family (Gaussian with `σ = 1`).
    pub fn default_for(id: FamilyId) -> Self {
        let (kind, (lo, hi)) = match id {
            FamilyId::Bernoulli => (
                FamilyKind::Bernoulli,
                (Self::DEFAULT_BERNOULLI_MARGIN, 1.0 - Self::DEFAULT_BERNOULLI_MARGIN),
            ),
            FamilyId::GaussianFixedVar => (FamilyKind::GaussianKnownVariance { sigma: 1.0 }, Self::DEFAULT_GAUSSIAN_RANGE),
            FamilyId::ExponentialRate => (FamilyKind::ExponentialRate, Self::DEFAULT_RATE_RANGE),
        };
        Self::new(kind, ParameterSpace::new(lo, hi).expect("shipped space")).expect("shipped family")
    }

    pub fn id(&self) -> FamilyId {
        match self.kind {
            FamilyKind::Bernoulli => FamilyId::Bernoulli,
            FamilyKind::GaussianKnownVariance { .. } => FamilyId::GaussianFixedVar,
            FamilyKind::ExponentialRate => FamilyId::ExponentialRate,
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn space(&self) -> ParameterSpace {
        self.space
    }

    /// Checks that `x` lies in the observation domain of the family.
    pub fn check_observation(&self, x: f64) -> Result<()> {
        let ok = match self.kind {
            FamilyKind::Bernoulli => x == 0.0 || x == 1.0,
            FamilyKind::GaussianKnownVariance { .. } => x.is_finite(),
            FamilyKind::ExponentialRate => x.is_finite() && x >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            domain(format!("observation {x} is outside the domain of the {} family", self.id()))
        }
    }

    pub fn check_data(&self, data: &Dataset) -> Result<()> {
        data.iter().try_for_each(|x| self.check_observation(x))
    }

    /// Two extreme points of the observation domain. Replacing an observation
    /// by either one pushes its block estimate as far as it can go.
    pub fn observation_extremes(&self) -> (f64, f64) {
        match self.kind {
            FamilyKind::Bernoulli => (0.0, 1.0),
            FamilyKind::GaussianKnownVariance { sigma } => {
                let reach = 1e6 * sigma.max(self.space.diameter());
                (self.space.lower - reach, self.space.upper + reach)
            }
            FamilyKind::ExponentialRate => (1e-12, 1e12),
        }
    }

    /// Draws `n` i.i.d. observations from `f(·; theta)`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, n: usize, rng: &mut R) -> Result<Dataset> {
        self.space.check(theta)?;
        if n == 0 {
            return invalid("sample size n must be at least 1");
        }
        let observations = match self.kind {
            FamilyKind::Bernoulli => (0..n).map(|_| if rng.gen::<f64>() < theta { 1.0 } else { 0.0 }).collect(),
            FamilyKind::GaussianKnownVariance { sigma } => {
                let mut out = Vec::with_capacity(n + 1);
                while out.len() < n {
                    // u1 in (0, 1] keeps the logarithm finite.
                    let u1 = 1.0 - rng.gen::<f64>();
                    let u2: f64 = rng.gen();
                    let r = (-2.0 * u1.ln()).sqrt();
                    let (s, c) = (2.0 * PI * u2).sin_cos();
                    out.push(theta + sigma * r * c);
                    out.push(theta + sigma * r * s);
                }
                out.truncate(n);
                out
            }
            FamilyKind::ExponentialRate => (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() / theta).collect(),
        };
        Ok(Dataset { observations })
    }

    /// `ln f(x; theta)` for a single observation.
    pub fn log_density(&self, theta: f64, x: f64) -> Result<f64> {
        self.check_observation(x)?;
        Ok(match self.kind {
            FamilyKind::Bernoulli => {
                if x == 1.0 {
                    theta.ln()
                } else {
                    (1.0 - theta).ln()
                }
            }
            FamilyKind::GaussianKnownVariance { sigma } => {
                let z = (x - theta) / sigma;
                -0.5 * (2.0 * PI * sigma * sigma).ln() - 0.5 * z * z
            }
            FamilyKind::ExponentialRate => theta.ln() - theta * x,
        })
    }

    /// `Σᵢ ln f(xᵢ; theta)`.
    pub fn log_likelihood(&self, theta: f64, data: &Dataset) -> Result<f64> {
        self.space.check(theta)?;
        data.iter().map(|x| self.log_density(theta, x)).sum()
    }

    /// The score `∂/∂θ ln f(x; θ)`.
    ///
    /// Defined wherever the family's density is differentiable in `θ`, which
    /// may extend slightly beyond `Θ` (useful for finite differences).
    pub fn score(&self, theta: f64, x: f64) -> Result<f64> {
        self.check_observation(x)?;
        match self.kind {
            FamilyKind::Bernoulli => {
                if !(theta > 0.0 && theta < 1.0) {
                    return domain(format!("Bernoulli score is undefined at theta = {theta}"));
                }
                Ok(x / theta - (1.0 - x) / (1.0 - theta))
            }
            FamilyKind::GaussianKnownVariance { sigma } => {
                if !theta.is_finite() {
                    return domain(format!("Gaussian score is undefined at theta = {theta}"));
                }
                Ok((x - theta) / (sigma * sigma))
            }
            FamilyKind::ExponentialRate => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return domain(format!("exponential score is undefined at rate {theta}"));
                }
                Ok(1.0 / theta - x)
            }
        }
    }

    /// Closed-form Fisher information `I_f(theta)` of a single observation.
    pub fn fisher_information(&self, theta: f64) -> Result<f64> {
        self.space.check(theta)?;
        match self.kind {
            FamilyKind::Bernoulli => {
                if theta <= 0.0 || theta >= 1.0 {
                    return domain(format!("Bernoulli Fisher information is infinite at theta = {theta}"));
                }
                Ok(1.0 / (theta * (1.0 - theta)))
            }
            FamilyKind::GaussianKnownVariance { sigma } => Ok(1.0 / (sigma * sigma)),
            FamilyKind::ExponentialRate => Ok(1.0 / (theta * theta)),
        }
    }
}

/// A nonempty sequence of finite observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<f64>,
}

impl Dataset {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return invalid("dataset must contain at least one observation");
        }
        if let Some((i, x)) = observations.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return domain(format!("observation {i} is not finite ({x})"));
        }
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.observations
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().copied()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.observations
    }

    pub fn mean(&self) -> f64 {
        self.observations.iter().sum::<f64>() / self.len() as f64
    }

    /// A copy with observation `index` replaced by `value`: a neighbor of `self`
    /// whenever `value` differs from the original.
    pub fn with_replaced(&self, index: usize, value: f64) -> Result<Self> {
        if index >= self.len() {
            return invalid(format!("index {index} out of range for a dataset of {} points", self.len()));
        }
        let mut observations = self.observations.clone();
        observations[index] = value;
        Dataset::new(observations)
    }
}

impl TryFrom<Vec<f64>> for Dataset {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Dataset::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_space() -> ParameterSpace {
        ParameterSpace::new(0.0, 1.0).unwrap()
    }

    fn bern01() -> ParametricFamily {
        ParametricFamily::bernoulli(unit_space()).unwrap()
    }

    fn gauss1() -> ParametricFamily {
        ParametricFamily::gaussian(1.0, ParameterSpace::new(-5.0, 5.0).unwrap()).unwrap()
    }

    fn expo() -> ParametricFamily {
        ParametricFamily::default_for(FamilyId::ExponentialRate)
    }

    fn data(v: &[f64]) -> Dataset {
        Dataset::new(v.to_vec()).unwrap()
    }

    #[test]
    fn space_validation() {
        assert!(ParameterSpace::new(1.0, 1.0).is_err());
        assert!(ParameterSpace::new(2.0, 1.0).is_err());
        assert!(ParameterSpace::new(0.0, f64::INFINITY).is_err());
        assert!(ParameterSpace::new(-f64::MAX, f64::MAX).is_err());
        let s = ParameterSpace::new(0.25, 2.0).unwrap();
        assert_eq!(s.diameter(), 1.75);
        assert_eq!(s.clamp(-1.0), 0.25);
        assert_eq!(s.clamp(9.0), 2.0);
    }

    #[test]
    fn family_validation() {
        assert!(ParametricFamily::bernoulli(ParameterSpace::new(0.0, 1.5).unwrap()).is_err());
        assert!(ParametricFamily::bernoulli_with_margin(0.0).is_err());
        assert!(ParametricFamily::gaussian(0.0, unit_space()).is_err());
        assert!(ParametricFamily::exponential_rate(ParameterSpace::new(0.0, 1.0).unwrap()).is_err());
        let b = ParametricFamily::default_for(FamilyId::Bernoulli);
        assert_eq!(b.space().lower(), 0.01);
        assert_eq!(b.space().upper(), 0.99);
        let e = expo();
        assert_eq!((e.space().lower(), e.space().upper()), (0.1, 10.0));
    }

    #[test]
    fn family_ids_round_trip() {
        for id in FamilyId::ALL {
            assert_eq!(id.as_str().parse::<FamilyId>().unwrap(), id);
            assert_eq!(ParametricFamily::default_for(id).id(), id);
        }
        assert!("poisson".parse::<FamilyId>().is_err());
    }

    #[test]
    fn point_mass_bernoulli() {
        let d = bern01().sample(1.0, 50, &mut stream(3)).unwrap();
        assert!(d.iter().all(|x| x == 1.0));
        let d = bern01().sample(0.0, 50, &mut stream(3)).unwrap();
        assert!(d.iter().all(|x| x == 0.0));
    }

    #[test]
    fn sample_rejects_bad_arguments() {
        let b = ParametricFamily::default_for(FamilyId::Bernoulli);
        assert!(matches!(b.sample(0.995, 10, &mut stream(1)), Err(Error::Domain(_))));
        assert!(matches!(b.sample(0.5, 0, &mut stream(1)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sample_means() {
        // Bands of four Monte Carlo standard errors.
        let n = 1_000_000;
        let m = bern01().sample(0.3, n, &mut stream(11)).unwrap().mean();
        assert!((m - 0.3).abs() < 0.002, "bernoulli mean {m}");
        let m = expo().sample(2.0, n, &mut stream(12)).unwrap().mean();
        assert!((m - 0.5).abs() < 0.002, "exponential mean {m}");
        let d = gauss1().sample(0.7, n, &mut stream(13)).unwrap();
        let m = d.mean();
        let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
        assert!((m - 0.7).abs() < 0.004, "gaussian mean {m}");
        assert!((v - 1.0).abs() < 0.006, "gaussian variance {v}");
    }

    #[test]
    fn sampling_is_deterministic() {
        for id in FamilyId::ALL {
            let f = ParametricFamily::default_for(id);
            let theta = f.space().lower() + 0.4 * f.space().diameter();
            let a = f.sample(theta, 1001, &mut stream(99)).unwrap();
            let b = f.sample(theta, 1001, &mut stream(99)).unwrap();
            assert_eq!(a.len(), 1001);
            assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
            f.check_data(&a).unwrap();
        }
    }

    #[test]
    fn log_likelihood_examples() {
        assert_relative_eq!(
            bern01().log_likelihood(0.5, &data(&[0.0, 1.0])).unwrap(),
            -1.3862943611198906,
            max_relative = 1e-14
        );
        let g = ParametricFamily::gaussian(1.0, ParameterSpace::new(-1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(g.log_likelihood(0.0, &data(&[0.0])).unwrap(), -0.9189385332046727, max_relative = 1e-14);
        assert_relative_eq!(expo().log_likelihood(1.0, &data(&[1.0, 1.0])).unwrap(), -2.0, max_relative = 1e-14);
    }

    #[test]
    fn log_likelihood_rejects_out_of_domain_observations() {
        assert!(matches!(bern01().log_likelihood(0.5, &data(&[0.0, 2.0])), Err(Error::Domain(_))));
        assert!(matches!(expo().log_likelihood(1.0, &data(&[-1.0])), Err(Error::Domain(_))));
        assert!(matches!(expo().log_likelihood(20.0, &data(&[1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn score_examples() {
        assert_eq!(bern01().score(0.5, 1.0).unwrap(), 2.0);
        assert_eq!(gauss1().score(0.37, 0.37).unwrap(), 0.0);
        assert_eq!(expo().score(2.0, 0.5).unwrap(), 0.0);
        assert!(matches!(bern01().score(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bern01().score(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(bern01().fisher_information(0.5).unwrap(), 4.0);
        assert_eq!(gauss1().fisher_information(-3.2).unwrap(), 1.0);
        assert_eq!(expo().fisher_information(2.0).unwrap(), 0.25);
        assert!(matches!(expo().fisher_information(11.0), Err(Error::Domain(_))));
        assert!(matches!(bern01().fisher_information(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN]).is_err());
        let d = data(&[1.0, 2.0, 3.0]);
        let e = d.with_replaced(1, 5.0).unwrap();
        assert_eq!(e.as_slice(), &[1.0, 5.0, 3.0]);
        assert!(d.with_replaced(3, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn log_likelihood_is_additive(seed in any::<u64>(), n in 1usize..200, frac in 0.05f64..0.95) {
            for id in FamilyId::ALL {
                let f = ParametricFamily::default_for(id);
                let theta = f.space().lower() + frac * f.space().diameter();
                let d = f.sample(theta, n, &mut stream(seed)).unwrap();
                let whole = f.log_likelihood(theta, &d).unwrap();
                let parts: f64 = d
                    .iter()
                    .map(|x| f.log_likelihood(theta, &Dataset::new(vec![x]).unwrap()).unwrap())
                    .sum();
                prop_assert!((whole - parts).abs() <= 1e-10 * whole.abs().max(1.0));
            }
        }
    }
}
