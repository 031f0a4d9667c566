//! Structural conditions on speed functions.

use icflow::speed::{class_c_audit, CurvatureFunction, NormA, SpeedFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn admissible_speeds_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for speed in [
        SpeedFunction::MeanCurvature,
        SpeedFunction::Power { k: 2 },
        SpeedFunction::Quotient { k: 2 },
        SpeedFunction::Ratio { i: 2, j: 0 },
    ] {
        let report = class_c_audit(&speed, 2, 2000, &mut rng);
        assert!(report.passed, "{report:?}");
    }
    for speed in [SpeedFunction::Power { k: 3 }, SpeedFunction::Ratio { i: 3, j: 1 }, SpeedFunction::Quotient { k: 2 }] {
        let report = class_c_audit(&speed, 3, 500, &mut rng);
        assert!(report.passed, "{report:?}");
    }
}

#[test]
fn mean_curvature_hessian_vanishes() {
    let h = SpeedFunction::MeanCurvature.hessian(&[0.3, 1.7]);
    assert!(h.iter().flatten().all(|x| *x == 0.0));
}

#[test]
fn norm_of_second_form_is_not_concave() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let report = class_c_audit(&NormA, 2, 500, &mut rng);
    assert!(!report.passed);
    assert!(!report.concavity.passed);
    assert_eq!(report.concavity.failures, 500);
    assert!(report.positivity.passed && report.symmetry.passed && report.homogeneity.passed && report.monotonicity.passed);
}

proptest! {
    #[test]
    fn homogeneous_of_degree_one(k1 in 0.05f64..5.0, k2 in 0.05f64..5.0, c in 0.1f64..10.0) {
        for speed in [SpeedFunction::Power { k: 2 }, SpeedFunction::Quotient { k: 2 }, SpeedFunction::MeanCurvature] {
            let rho = speed.value(&[k1, k2]);
            prop_assert!((speed.value(&[c * k1, c * k2]) - c * rho).abs() < 1e-12 * c * rho);
            prop_assert!((speed.value(&[k2, k1]) - rho).abs() < 1e-12 * rho);
        }
    }
}
