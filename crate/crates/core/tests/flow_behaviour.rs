//! Flow of spheres and perturbed spheres.

use icflow::flow::{asymptotics_check, run, step, FlowConfig};
use icflow::generate;
use icflow::grid::GridSpec;
use icflow::speed::SpeedFunction;

fn spec(nt: usize) -> GridSpec {
    GridSpec::new(nt, 2 * nt).unwrap()
}

const SPEEDS: [SpeedFunction; 4] = [
    SpeedFunction::MeanCurvature,
    SpeedFunction::Quotient { k: 2 },
    SpeedFunction::Power { k: 2 },
    SpeedFunction::Ratio { i: 2, j: 0 },
];

#[test]
fn spheres_expand_exponentially() {
    for speed in SPEEDS {
        let s = generate::sphere(spec(12), 0.8).unwrap();
        let mut config = FlowConfig::new(speed, 1.0);
        config.rescale = false;
        let trace = run(&s, &config).unwrap();
        let mu = speed.mu(2);
        let expect = 0.8 * (1.0 / mu).exp();
        let f = trace.final_surface.unwrap();
        for v in f.radius().values() {
            assert!((v - expect).abs() < 1e-8 * expect, "{speed}: {v} vs {expect}");
        }
        for r in &trace.records {
            assert!((r.osc - 1.0).abs() < 1e-12);
            assert!(r.e_sup.iter().all(|e| *e < 1e-10));
        }
    }
}

#[test]
fn rescaled_sphere_is_a_fixed_point() {
    for speed in SPEEDS {
        let s = generate::sphere(spec(12), 1.0).unwrap();
        let trace = run(&s, &FlowConfig::new(speed, 1.0)).unwrap();
        let first = &trace.records[0];
        for r in &trace.records {
            assert!((r.ubar_mean - first.ubar_mean).abs() < 1e-9);
            assert!(r.ubar_osc < 1e-12);
            assert!((r.willmore - 16.0 * std::f64::consts::PI).abs() < 1e-10);
            assert!(r.willmore_rate.abs() < 1e-10);
        }
    }
}

#[test]
fn one_step_matches_exponential() {
    let s = generate::sphere(spec(12), 1.0).unwrap();
    let next = step(&s, &SpeedFunction::MeanCurvature, 0.01).unwrap();
    let expect = 0.005f64.exp();
    assert!(next.radius().values().iter().all(|v| (v - expect).abs() < 1e-10));
}

#[test]
fn step_is_fourth_order_on_spheres() {
    let error = |n: usize| {
        let dt = 1.0 / n as f64;
        let mut s = generate::sphere(spec(8), 1.0).unwrap();
        for _ in 0..n {
            s = step(&s, &SpeedFunction::MeanCurvature, dt).unwrap();
        }
        (s.radius().values()[0] - 0.5f64.exp()).abs()
    };
    let (coarse, fine) = (error(4), error(8));
    let order = (coarse / fine).log2();
    assert!(order > 3.8, "observed order {order}");
}

#[test]
fn filter_does_not_touch_spheres() {
    let s = generate::sphere(spec(12), 1.0).unwrap();
    let mut config = FlowConfig::new(SpeedFunction::MeanCurvature, 0.5);
    let filtered = run(&s, &config).unwrap();
    config.filter_strength = 0.0;
    let raw = run(&s, &config).unwrap();
    for (a, b) in filtered.records.iter().zip(&raw.records) {
        assert!((a.ubar_mean - b.ubar_mean).abs() < 1e-14);
    }
}

#[test]
fn axial_symmetry_is_preserved() {
    let s = generate::spheroid(spec(16), 1.0, 0.7).unwrap();
    let mut next = s;
    for _ in 0..5 {
        next = step(&next, &SpeedFunction::MeanCurvature, 1e-3).unwrap();
    }
    let n_phi = next.spec().n_phi;
    for ring in next.radius().values().chunks(n_phi) {
        assert!(ring.iter().all(|v| (v - ring[0]).abs() < 1e-10));
    }
}

#[test]
fn perturbed_sphere_rounds_out() {
    let s = generate::from_fn(spec(16), |t, p| 1.0 + 0.1 * t.sin().powi(2) * (2.0 * p).cos()).unwrap();
    let mut config = FlowConfig::new(SpeedFunction::MeanCurvature, 1.0);
    config.record_every = 1;
    let trace = run(&s, &config).unwrap();
    let report = asymptotics_check(&trace);
    assert!(report.passed, "{report:?}");
    assert_eq!(report.willmore_monotone, Some(true));
    assert_eq!(report.q_monotone, Some(true));
    assert!(trace.beta.unwrap() > 0.0);
    for (_, fd, rate) in trace.willmore_rate_mismatch() {
        assert!((fd - rate).abs() < 1e-3 * rate.abs());
    }
}

#[test]
fn other_speeds_round_out_convex_starts() {
    let s = generate::spheroid(spec(16), 1.0, 0.8).unwrap();
    for speed in [SpeedFunction::Power { k: 2 }, SpeedFunction::Quotient { k: 2 }] {
        let trace = run(&s, &FlowConfig::new(speed, 0.5)).unwrap();
        let (first, last) = (&trace.records[0], trace.records.last().unwrap());
        assert!(last.osc < first.osc);
        assert!(last.shape_dev < first.shape_dev);
    }
}

#[test]
fn injected_noise_is_flagged() {
    let s = generate::from_fn(spec(12), |t, p| 1.0 + 0.1 * t.sin().powi(2) * (2.0 * p).cos()).unwrap();
    let mut config = FlowConfig::new(SpeedFunction::MeanCurvature, 0.3);
    config.record_every = 2;
    let mut trace = run(&s, &config).unwrap();
    let mid = trace.records.len() / 2;
    trace.records[mid].willmore *= 1.05;
    trace.records[mid].q[0] *= 1.05;
    let report = asymptotics_check(&trace);
    assert!(!report.passed);
    assert_eq!(report.willmore_violations, vec![mid]);
    assert_eq!(report.q_violations, vec![mid]);
}

#[test]
fn leaving_the_cone_is_an_error() {
    let s = generate::harmonic(spec(16), 1.0, &[(4, 0, 0.2)]).unwrap();
    let geo = s.geometry().unwrap();
    assert!(geo.mean_curvature.iter().all(|h| *h > 0.0));
    assert!(geo.sigma.iter().any(|e| e[2] < 0.0));
    let err = run(&s, &FlowConfig::new(SpeedFunction::Power { k: 2 }, 0.1)).unwrap_err();
    assert_eq!(err.kind(), "curvature_cone");
}

#[test]
fn csv_has_fixed_header() {
    let s = generate::sphere(spec(8), 1.0).unwrap();
    let trace = run(&s, &FlowConfig::new(SpeedFunction::MeanCurvature, 0.1)).unwrap();
    let csv = trace.to_csv();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,W,Q1,E_sup_-0.25,E_sup_0,E_sup_1,osc,ubar_mean,ubar_osc,shape_dev");
    assert_eq!(csv.lines().count(), trace.records.len() + 1);
}
