mod common;

use levyband::bootstrap::{
    band_for_data, bootstrap_quantile, confidence_band, coverage_experiment, multiplier_process,
    multiplier_sup, multiplier_weights, quantile_from_sups, symmetric_interval, BootstrapConfig,
};
use levyband::estimator::{analyse, Analysis, CfChoice};
use levyband::spectral::InfluenceKernels;
use levyband::{EstimatorConfig, GroundTruth, MAKernel, ObservationSeries};
use num_complex::Complex64;
use proptest::prelude::*;

use common::{default_model, limit_data};

fn analysis(data: &ObservationSeries, h: f64, points: usize) -> Analysis {
    let cfg = EstimatorConfig::new(h, MAKernel::new(0.8).unwrap())
        .unwrap()
        .with_interval([0.5, 3.0], points)
        .unwrap();
    analyse(data, &cfg, CfChoice::Empirical).unwrap()
}

#[test]
fn zero_and_unit_weights_give_zero() {
    let data = limit_data(0.8, 2000, 0.01, 3);
    let a = analysis(&data, 0.2, 31);
    let s = &a.estimate.s_hat;
    assert_eq!(multiplier_sup(&a.influence, s, &vec![0.0; 2000]).unwrap(), 0.0);
    let ones = multiplier_process(&a.influence, s, &vec![1.0; 2000]).unwrap();
    assert!(ones.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
}

#[test]
fn matches_the_double_sum_at_n_4() {
    let data = ObservationSeries::new(vec![0.01, 1.3, 0.01, 2.2], 0.01).unwrap();
    let a = analysis(&data, 0.5, 11);
    let w = [0.3, -1.2, 0.8, 2.0];
    let t = multiplier_process(&a.influence, &a.estimate.s_hat, &w).unwrap();
    for (i, &x) in a.influence.x.iter().enumerate() {
        let terms: Vec<Complex64> = data.increments.iter().map(|&d| a.kernels.influence(x, d)).collect();
        let mut brute = Complex64::new(0.0, 0.0);
        for j in 0..4 {
            let mean: Complex64 = terms.iter().sum::<Complex64>() / 4.0;
            brute += (terms[j] - mean) * w[j];
        }
        brute /= a.estimate.s_hat[i] * 2.0;
        assert!((t[i] - brute).norm() <= 1e-12 * (1.0 + brute.norm()), "x={x}");
    }
}

#[test]
fn degenerate_variance_is_an_error() {
    let data = ObservationSeries::new(vec![0.2; 10], 0.01).unwrap();
    let a = analysis(&data, 0.5, 5);
    let err = multiplier_sup(&a.influence, &a.estimate.s_hat, &[1.0; 10]).unwrap_err();
    assert!(matches!(err, levyband::Error::DegenerateVariance { .. }));
}

#[test]
fn quantile_replays_from_recorded_sups() {
    let data = limit_data(0.8, 3000, 0.01, 9);
    let a = analysis(&data, 0.2, 41);
    let cfg = BootstrapConfig::new(300, 0.1, 17).unwrap();
    let draws = bootstrap_quantile(&a.influence, &a.estimate.s_hat, &cfg).unwrap();
    assert_eq!(draws.sups.len(), 300);
    let mut sorted = draws.sups.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(draws.c_hat, sorted[269]);
    assert_eq!(draws.c_hat, quantile_from_sups(&draws.sups, 0.1).unwrap());
    assert!(quantile_from_sups(&draws.sups, 0.05).unwrap() >= quantile_from_sups(&draws.sups, 0.5).unwrap());
    // Each recorded sup is replayable from its own stream.
    let w = multiplier_weights(17, 123, 3000);
    assert_eq!(draws.sups[123], multiplier_sup(&a.influence, &a.estimate.s_hat, &w).unwrap());
    let one = BootstrapConfig::new(1, 0.3, 17).unwrap();
    let single = bootstrap_quantile(&a.influence, &a.estimate.s_hat, &one).unwrap();
    assert_eq!(single.c_hat, draws.sups[0]);
}

#[test]
fn multiplier_process_is_conditionally_centred() {
    let data = limit_data(0.8, 3000, 0.01, 12);
    let a = analysis(&data, 0.2, 21);
    let b = 2000;
    let l = a.influence.x.len();
    let mut sum = vec![Complex64::new(0.0, 0.0); l];
    let mut sq = vec![0.0; l];
    for r in 0..b {
        let t = multiplier_process(&a.influence, &a.estimate.s_hat, &multiplier_weights(5, r, 3000)).unwrap();
        for i in 0..l {
            sum[i] += t[i];
            sq[i] += t[i].norm_sqr();
        }
    }
    for i in 0..l {
        let mean = sum[i] / b as f64;
        let sd = (sq[i] / b as f64 - mean.norm_sqr()).sqrt();
        assert!(mean.norm() <= 3.0 / (b as f64).sqrt() * sd, "x index {i}");
    }
}

#[test]
fn quantile_is_stable_across_seed_sets() {
    let data = limit_data(0.8, 10_000, 0.01, 1);
    let a = analysis(&data, 0.2, 101);
    let q = |seed| {
        let cfg = BootstrapConfig::new(2000, 0.1, seed).unwrap();
        bootstrap_quantile(&a.influence, &a.estimate.s_hat, &cfg).unwrap().c_hat
    };
    let (c1, c2) = (q(100), q(200));
    assert!((c1 - c2).abs() <= 0.05 * c1.max(c2), "{c1} vs {c2}");
}

#[test]
fn zero_quantile_collapses_the_band() {
    let data = limit_data(0.8, 2000, 0.01, 4);
    let a = analysis(&data, 0.25, 21);
    let band = confidence_band(&a.estimate, 0.0, 0.1, 2000, 0.01).unwrap();
    assert_eq!(band.lo, band.hi);
    assert_eq!(band.lo, band.center);
    let band = confidence_band(&a.estimate, 2.5, 0.1, 2000, 0.01).unwrap();
    for i in 0..band.x.len() {
        let expected = 2.0 * band.s_hat[i] * 2.5 / ((2000f64).sqrt() * 0.01);
        assert!(((band.hi[i] - band.lo[i]) - expected).abs() <= 1e-12 * expected);
        assert_eq!(band.hi[i] - band.center[i], band.center[i] - band.lo[i]);
    }
}

#[test]
fn identical_seeds_give_identical_bands() {
    let data = limit_data(0.8, 2000, 0.01, 8);
    let est = EstimatorConfig::new(0.2, MAKernel::new(0.8).unwrap()).unwrap();
    let boot = BootstrapConfig::new(200, 0.1, 44).unwrap();
    let (a, da) = band_for_data(&data, &est, &boot, CfChoice::Empirical).unwrap();
    let (b, db) = band_for_data(&data, &est, &boot, CfChoice::Empirical).unwrap();
    assert_eq!(a, b);
    assert_eq!(da, db);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.lo), bits(&b.lo));
}

#[test]
fn near_full_width_band_covers() {
    let truth = GroundTruth::new(default_model());
    let kernel = MAKernel::new(0.8).unwrap();
    let est = EstimatorConfig::new(0.15, kernel).unwrap();
    let boot = BootstrapConfig::new(5000, 0.001, 3).unwrap();
    let gen = |seed| {
        let scheme = levyband::SamplingScheme::new(0.01, 10_000, seed)?;
        levyband::simulate::simulate_oracle_increments(&truth.triplet, &kernel, &scheme)
    };
    let report = coverage_experiment(&truth, gen, 6, &est, &boot, 20).unwrap();
    assert_eq!(report.failures, 0);
    assert!(report.coverage >= 0.99, "coverage {}", report.coverage);
}

#[test]
fn single_replicate_report_has_one_row() {
    let truth = GroundTruth::new(default_model());
    let kernel = MAKernel::new(0.8).unwrap();
    let est = EstimatorConfig::new(0.25, kernel).unwrap().with_interval([0.5, 3.0], 11).unwrap();
    let boot = BootstrapConfig::new(50, 0.1, 3).unwrap();
    let gen = |seed| {
        let scheme = levyband::SamplingScheme::new(0.01, 1000, seed)?;
        levyband::simulate::simulate_oracle_increments(&truth.triplet, &kernel, &scheme)
    };
    let report = coverage_experiment(&truth, gen, 6, &est, &boot, 1).unwrap();
    assert_eq!(report.rows.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    report.write_csv(&dir.path().join("c.csv")).unwrap();
    report.write_json(&dir.path().join("c.json")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("replicate,covered,max_width"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    for key in ["coverage", "mean_width", "failures"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn failed_replicates_are_counted() {
    let truth = GroundTruth::new(default_model());
    let kernel = MAKernel::new(0.8).unwrap();
    let est = EstimatorConfig::new(0.25, kernel).unwrap().with_interval([0.5, 3.0], 11).unwrap();
    let boot = BootstrapConfig::new(20, 0.1, 3).unwrap();
    let gen = |seed: u64| {
        if seed.is_multiple_of(2) {
            Err(levyband::Error::Domain("synthetic failure".into()))
        } else {
            let scheme = levyband::SamplingScheme::new(0.01, 500, seed)?;
            levyband::simulate::simulate_oracle_increments(&truth.triplet, &kernel, &scheme)
        }
    };
    let report = coverage_experiment(&truth, gen, 2, &est, &boot, 8).unwrap();
    assert_eq!(report.rows.len() + report.failures, 8);
    assert!(report.failures > 0);
    assert!(report.failed.iter().all(|f| f.error.contains("synthetic")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sign_flip_leaves_the_sup_unchanged(seed in 0u64..10_000) {
        let data = limit_data(0.8, 600, 0.02, seed % 7);
        let a = analysis(&data, 0.3, 11);
        let w = multiplier_weights(seed, 0, 600);
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let s1 = multiplier_sup(&a.influence, &a.estimate.s_hat, &w).unwrap();
        let s2 = multiplier_sup(&a.influence, &a.estimate.s_hat, &neg).unwrap();
        prop_assert_eq!(s1.to_bits(), s2.to_bits());
    }

    #[test]
    fn intervals_are_exactly_symmetric(c in -1e3f64..1e3, d in 0.0f64..1e3, e in -12i32..4) {
        let d = d * 10f64.powi(e);
        let (lo, hi) = symmetric_interval(c, d);
        prop_assert_eq!(hi - c, c - lo);
        prop_assert!(lo <= hi);
        prop_assert!(((hi - lo) - 2.0 * d).abs() <= 64.0 * f64::EPSILON * (c.abs() + d));
    }
}
