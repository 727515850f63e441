mod common;

use levyband::levy_model::limit_exponent_derivatives;
use levyband::simulate::{
    make_observations, simulate_oracle_increments, z_path_from_jumps, JumpRecord,
    ObservationSource,
};
use levyband::{JumpDensity, LevyTriplet, MAKernel, ObservationSeries, SamplingScheme};
use proptest::prelude::*;

use common::default_model;

#[test]
fn limit_law_moments_match_the_exponent() {
    let t = LevyTriplet::new(2.0, 0.5, 1.5, JumpDensity::default()).unwrap();
    let k = MAKernel::new(0.6).unwrap();
    let delta = 0.05;
    let n = 200_000;
    let data = simulate_oracle_increments(&t, &k, &SamplingScheme::new(delta, n, 11).unwrap()).unwrap();
    assert_eq!(data.source, ObservationSource::LimitLaw);
    let d = limit_exponent_derivatives(0.0, &t, &k).unwrap();
    let mean_want = delta * d[1].im;
    let var_want = -delta * d[2].re;
    let mean = data.increments.iter().sum::<f64>() / n as f64;
    let var = data.increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let se = (var_want / n as f64).sqrt();
    assert!((mean - mean_want).abs() <= 5.0 * se, "{mean} vs {mean_want}");
    assert!((var - var_want).abs() <= 0.03 * var_want, "{var} vs {var_want}");
}

#[test]
fn moving_average_without_jumps_is_flat() {
    let t = LevyTriplet::new(5.0, 0.0, 0.0, JumpDensity::default()).unwrap();
    let k = MAKernel::new(0.8).unwrap();
    let data = make_observations(&t, &k, &SamplingScheme::new(0.01, 500, 1).unwrap()).unwrap();
    assert_eq!(data.len(), 500);
    assert!(data.increments.iter().all(|&x| x == 0.0));
}

#[test]
fn injected_jump_shows_the_kernel() {
    let t = default_model();
    let k = MAKernel::new(0.8).unwrap();
    let grid: Vec<f64> = (0..200).map(|i| -1.0 + 0.02 * i as f64).collect();
    let z = z_path_from_jumps(&grid, &t, &k, &JumpRecord::single(0.3, 2.0), None).unwrap();
    for (zi, &s) in z.iter().zip(&grid) {
        let want = 5.0 * k.integral() + 2.0 * k.eval(s - 0.3);
        assert!((zi - want).abs() < 1e-12, "t={s}");
    }
}

#[test]
fn seeds_determine_the_draws() {
    let t = default_model();
    let k = MAKernel::new(0.8).unwrap();
    let s = |seed| SamplingScheme::new(0.02, 400, seed).unwrap();
    let a = simulate_oracle_increments(&t, &k, &s(5)).unwrap();
    let b = simulate_oracle_increments(&t, &k, &s(5)).unwrap();
    let c = simulate_oracle_increments(&t, &k, &s(6)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.increments, c.increments);
    let a = make_observations(&t, &k, &s(5)).unwrap();
    let b = make_observations(&t, &k, &s(5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn distinct_values_are_grouped() {
    let data = ObservationSeries::new(vec![0.5, -1.0, 0.5, 0.5, 2.0, -1.0], 0.1).unwrap();
    assert_eq!(data.distinct(), vec![(-1.0, 2), (0.5, 3), (2.0, 1)]);
    assert!(ObservationSeries::new(vec![f64::NAN], 0.1).is_err());
    assert!(ObservationSeries::new(vec![1.0], 0.0).is_err());
}

#[test]
fn csv_rejects_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "j,delta_x\n1,0.5\n2,abc\n").unwrap();
    let err = ObservationSeries::read_csv(&path, 0.1).unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    assert!(ObservationSeries::read_csv(&path, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn files_round_trip_bit_for_bit(values in prop::collection::vec(-1e6f64..1e6, 0..50), e in -12i32..6) {
        let scaled: Vec<f64> = values.iter().map(|v| v * 10f64.powi(e)).collect();
        let data = ObservationSeries::new(scaled, 0.01).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("x.csv");
        let bin = dir.path().join("x.bin");
        data.write_csv(&csv).unwrap();
        data.write_binary(&bin).unwrap();
        let bits = |s: &ObservationSeries| s.increments.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&ObservationSeries::read_csv(&csv, 0.01).unwrap()), bits(&data));
        prop_assert_eq!(bits(&ObservationSeries::read_binary(&bin, 0.01).unwrap()), bits(&data));
    }
}
