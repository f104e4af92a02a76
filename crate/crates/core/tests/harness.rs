use privest::harness::{
    dp_audit, efficiency_curve, run_trials, summarize, trial_outcomes, with_workers, EstimatorKind, ExperimentConfig,
};
use privest::rng::stream;
use privest::{FamilyId, KChoice, ParameterSpace, ParametricFamily};

fn bern01() -> ParametricFamily {
    ParametricFamily::bernoulli(ParameterSpace::new(0.0, 1.0).unwrap()).unwrap()
}

fn bernoulli_config(kind: EstimatorKind, n_grid: Vec<usize>, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        family: bern01(),
        theta_true: 0.3,
        n_grid,
        epsilon: 0.5,
        k_policy: KChoice::Auto,
        trials,
        seed: 20,
        estimator_kind: kind,
    }
}

#[test]
fn mle_mse_matches_exact_variance() {
    let c = bernoulli_config(EstimatorKind::Mle, vec![10_000], 10_000);
    let s = &run_trials(&c).unwrap()[0];
    let exact = 0.3 * 0.7 / 10_000.0;
    assert!((s.mse - exact).abs() < 0.05 * exact, "mse {} vs {exact}", s.mse);
    assert_eq!(s.predicted_mse.unwrap(), exact);
}

#[test]
fn private_mse_matches_decomposition() {
    let c = bernoulli_config(EstimatorKind::Private, vec![10_000], 10_000);
    let s = &run_trials(&c).unwrap()[0];
    assert_eq!(s.k, Some(332));
    let scale = 1.0 / (332.0 * 0.5);
    let predicted = 0.21 / 10_000.0 + 2.0 * scale * scale;
    assert!((s.mse - predicted).abs() < 0.05 * predicted, "mse {} vs {predicted}", s.mse);
}

#[test]
fn noise_coupling_with_noiseless_pipeline() {
    let private = bernoulli_config(EstimatorKind::Private, vec![2_000], 4_000);
    let noiseless = ExperimentConfig {
        estimator_kind: EstimatorKind::BlockAverage,
        ..private.clone()
    };
    let p = trial_outcomes(&private, 2_000).unwrap();
    let q = trial_outcomes(&noiseless, 2_000).unwrap();
    let sp = summarize(&private, &p).unwrap();
    let sq = summarize(&noiseless, &q).unwrap();

    let m = p.outcomes.len() as f64;
    let r: Vec<f64> = p.outcomes.iter().map(|o| o.noise).collect();
    let d: Vec<f64> = q.outcomes.iter().map(|o| o.error).collect();
    let mean_r2 = r.iter().map(|x| x * x).sum::<f64>() / m;
    let cross = r.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>() / m;
    let diff = sp.mse - sq.mse;
    // Same-seed coupling: every private error is the noiseless error plus its draw.
    assert!((diff - (mean_r2 + 2.0 * cross)).abs() <= 1e-10 * diff.abs());

    let mean_r = r.iter().sum::<f64>() / m;
    let var_r = r.iter().map(|x| (x - mean_r) * (x - mean_r)).sum::<f64>() / (m - 1.0);
    assert!((diff - var_r).abs() < 0.05 * var_r, "diff {diff} vs noise variance {var_r}");
}

#[test]
fn efficiency_trend_and_limits() {
    let c = bernoulli_config(EstimatorKind::Private, vec![1_000, 10_000, 100_000], 2_000);
    let curve = efficiency_curve(&c).unwrap();
    assert!(curve.windows(2).all(|w| w[1].1 < w[0].1), "{curve:?}");

    // Huge ε: the noise is negligible next to the block average.
    let mut loud = bernoulli_config(EstimatorKind::Private, vec![10_000], 4_000);
    loud.epsilon = 1e3;
    let quiet = ExperimentConfig {
        estimator_kind: EstimatorKind::BlockAverage,
        ..loud.clone()
    };
    let a = run_trials(&loud).unwrap()[0].relative_efficiency;
    let b = run_trials(&quiet).unwrap()[0].relative_efficiency;
    assert!((a - b).abs() < 0.05 * b, "{a} vs {b}");

    // k = 1: the noise term n·I·2Λ²/ε² dominates.
    let mut single = bernoulli_config(EstimatorKind::Private, vec![10_000], 4_000);
    single.k_policy = KChoice::Fixed(1);
    let s = &run_trials(&single).unwrap()[0];
    let predicted = 10_000.0 / 0.21 * (0.21 / 10_000.0 + 8.0);
    assert!((s.relative_efficiency - predicted).abs() < 0.1 * predicted);
    assert!(s.relative_efficiency > 1e5);
}

#[test]
fn exponential_bias_corrected_experiment() {
    let c = ExperimentConfig {
        family: ParametricFamily::default_for(FamilyId::ExponentialRate),
        theta_true: 2.0,
        n_grid: vec![20, 40],
        epsilon: 1.0,
        k_policy: KChoice::Auto,
        trials: 20_000,
        seed: 3,
        estimator_kind: EstimatorKind::BiasCorrected,
    };
    for s in run_trials(&c).unwrap() {
        let p = s.predicted_mse.unwrap();
        assert!((s.mse - p).abs() < 0.05 * p, "n={} mse {} vs {p}", s.n, s.mse);
        assert!(s.bias.abs() < 4.0 * (p / s.trials as f64).sqrt());
        assert_eq!(s.resamples, 0);
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let c = bernoulli_config(EstimatorKind::Private, vec![500, 5_000], 300);
    let one = with_workers(1, || run_trials(&c)).unwrap().unwrap();
    let eight = with_workers(8, || run_trials(&c)).unwrap().unwrap();
    assert_eq!(one, eight);
}

#[test]
fn audits_pass_for_shipped_families() {
    for id in privest::FamilyId::ALL {
        let f = ParametricFamily::default_for(id);
        for (n, k, eps) in [(100, 10, 1.0), (300, 300, 0.1), (1000, 33, 2.0), (50, 1, 0.5)] {
            let r = dp_audit(&f, n, eps, k, 100, 200, &mut stream(n as u64)).unwrap();
            assert!(r.pass, "{id} n={n} k={k} eps={eps}: {r:?}");
            assert!(r.max_sensitivity_ratio <= 1.0 + 1e-9);
        }
    }
}
