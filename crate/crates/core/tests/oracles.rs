//! Geometry of the oblate spheroid `x²+y² + z²/c² = 1` against an
//! independent parametrisation by reduced latitude, and grid operators
//! against hand-derived closed forms.

use std::f64::consts::PI;

use icflow::generate;
use icflow::grid::{Grid, GridSpec, ScalarField};
use icflow::invariants;

const A: f64 = 1.0;
const C: f64 = 0.6;

/// `(s², ρ, κ_meridian, κ_parallel)` at reduced latitude `β`, where the
/// profile is `(A cos β, C sin β)` and `s² = A² sin²β + C² cos²β`.
fn profile(beta: f64) -> (f64, f64, f64, f64) {
    let (sb, cb) = beta.sin_cos();
    let s2 = A * A * sb * sb + C * C * cb * cb;
    let meridian = A * C / s2.powf(1.5);
    let parallel = C / (A * s2.sqrt());
    (s2, A * cb, meridian, parallel)
}

/// Composite Simpson rule on `[-π/2, π/2]` of `2π ρ |γ'| g(β)`.
fn surface_integral(g: impl Fn(f64, f64) -> f64) -> f64 {
    let m = 20_000;
    let h = PI / m as f64;
    let mut total = 0.0;
    for i in 0..=m {
        let beta = -0.5 * PI + i as f64 * h;
        let (s2, rho, k1, k2) = profile(beta);
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        total += w * 2.0 * PI * rho * s2.sqrt() * g(k1, k2);
    }
    total * h / 3.0
}

/// Reduced latitude of the point of the spheroid in direction `θ`.
fn reduced_latitude(theta: f64) -> f64 {
    (A * theta.cos()).atan2(C * theta.sin())
}

// Frozen from the Simpson oracle above.
const AREA: f64 = 9.3894383728805426;
const TOTAL_MEAN_CURVATURE: f64 = 22.105741591529640;
const WILLMORE: f64 = 58.805094258164026;

#[test]
fn simpson_oracle_reproduces_frozen_values() {
    let e = (1.0 - C * C / (A * A)).sqrt();
    let closed_area = 2.0 * PI * A * A + PI * C * C / e * ((1.0 + e) / (1.0 - e)).ln();
    assert!((surface_integral(|_, _| 1.0) - closed_area).abs() < 1e-12 * closed_area);
    assert!((surface_integral(|_, _| 1.0) - AREA).abs() < 1e-12 * AREA);
    assert!((surface_integral(|k1, k2| k1 + k2) - TOTAL_MEAN_CURVATURE).abs() < 1e-12 * TOTAL_MEAN_CURVATURE);
    assert!((surface_integral(|k1, k2| (k1 + k2).powi(2)) - WILLMORE).abs() < 1e-12 * WILLMORE);
}

#[test]
fn spheroid_curvatures_match_parametrisation() {
    let spec = GridSpec::new(64, 128).unwrap();
    let s = generate::spheroid(spec, A, C).unwrap();
    let geo = s.geometry().unwrap();
    let grid = s.grid();
    let mut worst: f64 = 0.0;
    for k in 0..geo.len() {
        let (_, _, km, kp) = profile(reduced_latitude(grid.theta(k)));
        let expect = if km < kp { [km, kp] } else { [kp, km] };
        worst = worst.max((geo.principal[k][0] - expect[0]).abs());
        worst = worst.max((geo.principal[k][1] - expect[1]).abs());
        worst = worst.max((geo.mean_curvature[k] - km - kp).abs());
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn spheroid_integrals_match_frozen_values() {
    let spec = GridSpec::new(64, 128).unwrap();
    let geo = generate::spheroid(spec, A, C).unwrap().geometry().unwrap();
    assert!((geo.area() - AREA).abs() < 1e-11 * AREA);
    assert!((geo.sigma_integral(1).unwrap() - TOTAL_MEAN_CURVATURE).abs() < 1e-10 * TOTAL_MEAN_CURVATURE);
    assert!((invariants::willmore(&geo).unwrap() - WILLMORE).abs() < 1e-10 * WILLMORE);
}

#[test]
fn spheroid_quadrature_converges() {
    let error = |nt: usize| {
        let spec = GridSpec::new(nt, 2 * nt).unwrap();
        let geo = generate::spheroid(spec, A, C).unwrap().geometry().unwrap();
        (invariants::willmore(&geo).unwrap() - WILLMORE).abs()
    };
    let (e8, e16) = (error(8), error(16));
    assert!(e16 < e8 / 4.0, "{e8:e} -> {e16:e}");
}

#[test]
fn spheroid_quotient_exceeds_sphere() {
    let spec = GridSpec::new(32, 64).unwrap();
    let geo = generate::spheroid(spec, A, C).unwrap().geometry().unwrap();
    let q = invariants::guan_li_q(&geo, 1).unwrap();
    assert!((q - TOTAL_MEAN_CURVATURE / AREA.sqrt()).abs() < 1e-9);
    assert!(q > 4.0 * PI.sqrt());
}

fn field(grid: &std::sync::Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField::from_fn(grid.clone(), f).unwrap()
}

#[test]
fn quadrature_of_cos_squared() {
    let grid = Grid::new(GridSpec::new(32, 64).unwrap()).unwrap();
    let v = field(&grid, |t, _| t.cos().powi(2)).integrate();
    assert!((v - 4.0 * PI / 3.0).abs() < 1e-13);
}

#[test]
fn gradient_of_sin_theta_cos_phi() {
    let grid = Grid::new(GridSpec::new(24, 48).unwrap()).unwrap();
    let f = field(&grid, |t, p| t.sin() * p.cos());
    let g = f.gradient_norm_sq();
    for k in 0..grid.len() {
        let (t, p) = (grid.theta(k), grid.phi(k));
        let expect = (t.cos() * p.cos()).powi(2) + p.sin().powi(2);
        assert!((g.values()[k] - expect).abs() < 1e-12);
    }
}

#[test]
fn hessian_of_first_harmonic() {
    let grid = Grid::new(GridSpec::new(24, 48).unwrap()).unwrap();
    let f = field(&grid, |t, _| t.cos());
    let h = f.hessian();
    for (k, c) in h.components().iter().enumerate() {
        let (s, v) = (grid.sin_theta(k), f.values()[k]);
        assert!((c.tt + v).abs() < 1e-11);
        assert!(c.tp.abs() < 1e-11);
        assert!((c.pp + v * s * s).abs() < 1e-11);
    }
    let lap = f.laplacian();
    for (k, t) in h.round_trace().values().iter().enumerate() {
        assert!((t - lap.values()[k]).abs() < 1e-12);
    }
}

#[test]
fn laplacian_eigenvalues() {
    let grid = Grid::new(GridSpec::new(16, 32).unwrap()).unwrap();
    for (l, m) in [(1usize, 0i64), (2, 2), (5, -3), (9, 7)] {
        let y = field(&grid, |t, p| generate::real_harmonic(l, m, t, p));
        let lap = y.laplacian();
        let ev = -((l * (l + 1)) as f64);
        for (a, b) in lap.values().iter().zip(y.values()) {
            assert!((a - ev * b).abs() < 1e-10, "l={l} m={m}");
        }
    }
}
