//! Maximum likelihood and bias-corrected maximum likelihood estimates.
//!
//! Both estimators return values clamped into the family's parameter space.
//! The bias correction `θ̂_bc = θ̂ − b₁(θ̂)/n` acts on the raw (unclamped)
//! MLE; clamping is always the last step, so every returned value lies in `Θ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, FamilyKind, ParametricFamily};

/// A point estimate projected into the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// True exactly when `raw_value` lies outside the parameter space.
    pub clamped: bool,
    pub raw_value: f64,
}

impl Estimate {
    fn clamp_into(family: &ParametricFamily, raw_value: f64) -> Self {
        let space = family.space();
        Self {
            value: space.clamp(raw_value),
            clamped: !space.contains(raw_value),
            raw_value,
        }
    }
}

/// Closed-form maximizer of the likelihood over the natural parameter range.
fn raw_mle(family: &ParametricFamily, data: &[f64]) -> Result<f64> {
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    match family.kind() {
        FamilyKind::Bernoulli | FamilyKind::GaussianKnownVariance { .. } => Ok(mean),
        FamilyKind::ExponentialRate => {
            if mean > 0.0 {
                Ok(1.0 / mean)
            } else {
                Err(Error::DegenerateData {
                    block: None,
                    reason: "exponential sample has mean 0, the rate MLE is unbounded".into(),
                })
            }
        }
    }
}

fn b1(family: &ParametricFamily, theta: f64) -> f64 {
    match family.kind() {
        FamilyKind::Bernoulli | FamilyKind::GaussianKnownVariance { .. } => 0.0,
        // E[1/X̄] = nλ/(n−1) = λ + λ/n + O(1/n²)
        FamilyKind::ExponentialRate => theta,
    }
}

pub(crate) fn mle_slice(family: &ParametricFamily, data: &[f64]) -> Result<Estimate> {
    Ok(Estimate::clamp_into(family, raw_mle(family, data)?))
}

pub(crate) fn bias_corrected_slice(family: &ParametricFamily, data: &[f64]) -> Result<Estimate> {
    let theta = raw_mle(family, data)?;
    let corrected = theta - b1(family, theta) / data.len() as f64;
    Ok(Estimate::clamp_into(family, corrected))
}

/// The maximum likelihood estimate, clamped to the parameter space.
pub fn mle(family: &ParametricFamily, data: &Dataset) -> Result<Estimate> {
    family.check_data(data)?;
    mle_slice(family, data.as_slice())
}

/// Leading coefficient `b₁(θ)` of the MLE bias `b₁(θ)/n + O(n^(−3/2))`.
pub fn bias_coefficient(family: &ParametricFamily, theta: f64) -> Result<f64> {
    if !family.space().contains(theta) {
        return Err(Error::Domain(format!("theta = {theta} lies outside the parameter space")));
    }
    Ok(b1(family, theta))
}

/// `θ̂_MLE − b₁(θ̂_MLE)/n`, clamped to the parameter space.
pub fn bias_corrected_mle(family: &ParametricFamily, data: &Dataset) -> Result<Estimate> {
    family.check_data(data)?;
    bias_corrected_slice(family, data.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FamilyId, ParameterSpace};
    use crate::rng::stream;
    use proptest::prelude::*;

    fn data(v: &[f64]) -> Dataset {
        Dataset::new(v.to_vec()).unwrap()
    }

    fn bern01() -> ParametricFamily {
        ParametricFamily::bernoulli(ParameterSpace::new(0.0, 1.0).unwrap()).unwrap()
    }

    /// Maximizes the log-likelihood over a fine grid of Θ.
    fn grid_argmax(family: &ParametricFamily, d: &Dataset, steps: usize) -> f64 {
        let s = family.space();
        (0..=steps)
            .map(|i| s.lower() + s.diameter() * i as f64 / steps as f64)
            .map(|t| (t, family.log_likelihood(t, d).unwrap()))
            .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0
    }

    #[test]
    fn bernoulli_mle_matches_grid_search() {
        let d = data(&[1.0, 0.0, 1.0, 1.0]);
        let est = mle(&bern01(), &d).unwrap();
        assert_eq!(est.raw_value, 0.75);
        assert!(!est.clamped);
        assert!((grid_argmax(&bern01(), &d, 100_000) - 0.75).abs() < 1e-4);
    }

    #[test]
    fn gaussian_mle_clamps() {
        let g = ParametricFamily::gaussian(1.0, ParameterSpace::new(0.0, 1.0).unwrap()).unwrap();
        let est = mle(&g, &data(&[-3.0, -3.0])).unwrap();
        assert_eq!(est.raw_value, -3.0);
        assert_eq!(est.value, 0.0);
        assert!(est.clamped);
    }

    #[test]
    fn exponential_mle_matches_grid_search() {
        let e = ParametricFamily::default_for(FamilyId::ExponentialRate);
        let d = data(&[0.25, 0.75, 0.5, 0.5]);
        let est = mle(&e, &d).unwrap();
        assert_eq!(est.raw_value, 2.0);
        assert!((grid_argmax(&e, &d, 99_000) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn error_paths() {
        let e = ParametricFamily::default_for(FamilyId::ExponentialRate);
        assert!(matches!(mle(&e, &data(&[0.0, 0.0])), Err(Error::DegenerateData { .. })));
        assert!(matches!(bias_corrected_mle(&e, &data(&[0.0])), Err(Error::DegenerateData { .. })));
        assert!(matches!(mle(&bern01(), &data(&[0.5])), Err(Error::Domain(_))));
        assert!(matches!(bias_coefficient(&e, 0.05), Err(Error::Domain(_))));
    }

    #[test]
    fn bias_coefficients() {
        assert_eq!(bias_coefficient(&bern01(), 0.3).unwrap(), 0.0);
        let g = ParametricFamily::gaussian(1.0, ParameterSpace::new(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(bias_coefficient(&g, 0.7).unwrap(), 0.0);
        let e = ParametricFamily::default_for(FamilyId::ExponentialRate);
        assert_eq!(bias_coefficient(&e, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn exponential_bias_correction_formula() {
        let e = ParametricFamily::default_for(FamilyId::ExponentialRate);
        let est = bias_corrected_mle(&e, &data(&[0.25, 0.75, 0.5, 0.5])).unwrap();
        assert_eq!(est.raw_value, 1.5);
        assert_eq!(est.value, 1.5);
        // A single observation corrects to zero and clamps to λ_min.
        let est = bias_corrected_mle(&e, &data(&[0.5])).unwrap();
        assert_eq!(est.raw_value, 0.0);
        assert_eq!(est.value, 0.1);
        assert!(est.clamped);
    }

    #[test]
    fn bias_correction_halves_exponential_bias() {
        // Brute-force Monte Carlo bias oracle at λ = 2, t = 20.
        let e = ParametricFamily::default_for(FamilyId::ExponentialRate);
        let (lambda, t, trials) = (2.0, 20, 100_000);
        let mut rng = stream(2024);
        let (mut sum_mle, mut sum_bc) = (0.0, 0.0);
        for _ in 0..trials {
            let d = e.sample(lambda, t, &mut rng).unwrap();
            sum_mle += mle(&e, &d).unwrap().value - lambda;
            sum_bc += bias_corrected_mle(&e, &d).unwrap().value - lambda;
        }
        let (bias_mle, bias_bc) = (sum_mle / trials as f64, sum_bc / trials as f64);
        assert!((bias_mle - lambda / (t as f64 - 1.0)).abs() < 0.1 * lambda / (t as f64 - 1.0));
        assert!(bias_bc.abs() < 0.5 * bias_mle.abs());
    }

    #[test]
    fn mle_is_a_local_maximum() {
        for id in FamilyId::ALL {
            let f = ParametricFamily::default_for(id);
            let mut rng = stream(5 + id as u64);
            for _ in 0..100 {
                let theta = f.space().lower() + 0.5 * f.space().diameter();
                let d = f.sample(theta, 50, &mut rng).unwrap();
                let est = mle(&f, &d).unwrap();
                let r = est.raw_value;
                if r - 1e-3 < f.space().lower() || r + 1e-3 > f.space().upper() {
                    continue;
                }
                let at = f.log_likelihood(r, &d).unwrap();
                assert!(at >= f.log_likelihood(r - 1e-3, &d).unwrap());
                assert!(at >= f.log_likelihood(r + 1e-3, &d).unwrap());
            }
        }
    }

    proptest! {
        #[test]
        fn estimates_lie_in_the_space(seed in any::<u64>(), n in 1usize..60, frac in 0.0f64..=1.0) {
            for id in FamilyId::ALL {
                let f = ParametricFamily::default_for(id);
                let theta = f.space().lower() + frac * f.space().diameter();
                let d = f.sample(theta, n, &mut stream(seed)).unwrap();
                for est in [mle(&f, &d).unwrap(), bias_corrected_mle(&f, &d).unwrap()] {
                    prop_assert!(f.space().contains(est.value));
                    prop_assert_eq!(est.clamped, !f.space().contains(est.raw_value));
                }
            }
        }

        #[test]
        fn unbiased_families_need_no_correction(v in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let g = ParametricFamily::gaussian(2.0, ParameterSpace::new(-1.0, 3.0).unwrap()).unwrap();
            let d = Dataset::new(v).unwrap();
            prop_assert_eq!(mle(&g, &d).unwrap(), bias_corrected_mle(&g, &d).unwrap());
        }
    }
}
