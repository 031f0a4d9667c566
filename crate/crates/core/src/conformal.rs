//! Conformal Killing fields of `R³` and the diffeomorphisms they generate.
//!
//! Every conformal Killing field of Euclidean space has the form
//!
//! ```text
//! V(x) = v + S x + μ x + 2⟨b, x⟩ x - |x|² b
//! ```
//!
//! with `S` antisymmetric. Its conformal factor `α = div V / 3 = μ + 2⟨b, x⟩`
//! is affine in `x`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SVector, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::tri_len;
use crate::ode::{self, Tolerance};
use crate::surface::StarShapedHypersurface;

/// A smooth vector field on `R³` with a known Jacobian.
pub trait VectorField: Sync {
    fn evaluate(&self, x: &Vector3<f64>) -> Vector3<f64>;

    /// `J[i][j] = ∂V^i/∂x^j`.
    fn jacobian(&self, x: &Vector3<f64>) -> Matrix3<f64>;

    fn divergence(&self, x: &Vector3<f64>) -> f64 {
        self.jacobian(x).trace()
    }

    /// `div V / 3`.
    fn conformal_factor(&self, x: &Vector3<f64>) -> f64 {
        self.divergence(x) / 3.0
    }

    /// Spectral norm of `DV + DVᵀ - 2α I`, which vanishes exactly for conformal fields.
    fn killing_residual(&self, x: &Vector3<f64>) -> f64 {
        let j = self.jacobian(x);
        let m = j + j.transpose() - Matrix3::identity() * (2.0 * self.conformal_factor(x));
        m.symmetric_eigenvalues().amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalKillingField {
    pub v: [f64; 3],
    /// Strictly lower triangle `[S₁₀, S₂₀, S₂₁]` of the skew generator.
    #[serde(rename = "S_lower")]
    pub s_lower: [f64; 3],
    pub mu: f64,
    pub b: [f64; 3],
}

/// Number of real parameters of a conformal Killing field on `R³`.
pub const PARAMETER_COUNT: usize = 10;

impl ConformalKillingField {
    pub fn new(v: [f64; 3], s_lower: [f64; 3], mu: f64, b: [f64; 3]) -> Result<Self> {
        let field = ConformalKillingField { v, s_lower, mu, b };
        if field.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("conformal Killing field parameters must be finite".into()));
        }
        Ok(field)
    }

    pub fn zero() -> Self {
        ConformalKillingField {
            v: [0.0; 3],
            s_lower: [0.0; 3],
            mu: 0.0,
            b: [0.0; 3],
        }
    }

    pub fn translation(v: [f64; 3]) -> Self {
        ConformalKillingField { v, ..Self::zero() }
    }

    pub fn rotation(s_lower: [f64; 3]) -> Self {
        ConformalKillingField { s_lower, ..Self::zero() }
    }

    pub fn dilation(mu: f64) -> Self {
        ConformalKillingField { mu, ..Self::zero() }
    }

    pub fn special(b: [f64; 3]) -> Self {
        ConformalKillingField { b, ..Self::zero() }
    }

    /// Parameters uniform in `[-scale, scale]`.
    pub fn random(rng: &mut impl Rng, scale: f64) -> Self {
        let mut p = [0.0; PARAMETER_COUNT];
        for x in &mut p {
            *x = rng.gen_range(-scale..=scale);
        }
        Self::from_parameters(&p)
    }

    /// `[v₀, v₁, v₂, S₁₀, S₂₀, S₂₁, μ, b₀, b₁, b₂]`.
    pub fn parameters(&self) -> [f64; PARAMETER_COUNT] {
        let [v0, v1, v2] = self.v;
        let [s10, s20, s21] = self.s_lower;
        let [b0, b1, b2] = self.b;
        [v0, v1, v2, s10, s20, s21, self.mu, b0, b1, b2]
    }

    pub fn from_parameters(p: &[f64; PARAMETER_COUNT]) -> Self {
        ConformalKillingField {
            v: [p[0], p[1], p[2]],
            s_lower: [p[3], p[4], p[5]],
            mu: p[6],
            b: [p[7], p[8], p[9]],
        }
    }

    pub fn translation_vector(&self) -> Vector3<f64> {
        Vector3::from(self.v)
    }

    pub fn special_vector(&self) -> Vector3<f64> {
        Vector3::from(self.b)
    }

    pub fn skew(&self) -> Matrix3<f64> {
        let [s10, s20, s21] = self.s_lower;
        Matrix3::new(0.0, -s10, -s20, s10, 0.0, -s21, s20, s21, 0.0)
    }

    pub fn from_skew(v: [f64; 3], s: &Matrix3<f64>, mu: f64, b: [f64; 3]) -> Self {
        ConformalKillingField {
            v,
            s_lower: [s[(1, 0)], s[(2, 0)], s[(2, 1)]],
            mu,
            b,
        }
    }

    /// The field `x ↦ R V(Rᵀ x)` for an orthogonal `R`.
    pub fn conjugated(&self, r: &Matrix3<f64>) -> Self {
        let s = r * self.skew() * r.transpose();
        let v = r * self.translation_vector();
        let b = r * self.special_vector();
        ConformalKillingField::from_skew(v.into(), &s, self.mu, b.into())
    }

    /// `⟨V(x), ν⟩` as a linear form in the parameters: returns the ten basis values.
    pub fn normal_basis(x: &Vector3<f64>, nu: &Vector3<f64>) -> [f64; PARAMETER_COUNT] {
        let mut out = [0.0; PARAMETER_COUNT];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut p = [0.0; PARAMETER_COUNT];
            p[i] = 1.0;
            *slot = ConformalKillingField::from_parameters(&p).evaluate(x).dot(nu);
        }
        out
    }
}

impl VectorField for ConformalKillingField {
    fn evaluate(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let b = self.special_vector();
        self.translation_vector() + self.skew() * x + x * (self.mu + 2.0 * b.dot(x)) - b * x.norm_squared()
    }

    fn jacobian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let b = self.special_vector();
        self.skew() + Matrix3::identity() * (self.mu + 2.0 * b.dot(x)) + 2.0 * (x * b.transpose()) - 2.0 * (b * x.transpose())
    }

    fn divergence(&self, x: &Vector3<f64>) -> f64 {
        3.0 * self.conformal_factor(x)
    }

    fn conformal_factor(&self, x: &Vector3<f64>) -> f64 {
        self.mu + 2.0 * self.special_vector().dot(x)
    }
}

/// A conformal Killing field plus a linear part `P x`; conformal only when `P`
/// is a multiple of the identity plus a skew matrix.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedField {
    pub base: ConformalKillingField,
    pub linear: Matrix3<f64>,
}

impl VectorField for PerturbedField {
    fn evaluate(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.base.evaluate(x) + self.linear * x
    }

    fn jacobian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        self.base.jacobian(x) + self.linear
    }
}

fn tolerance() -> Tolerance {
    Tolerance::default()
}

/// `Φ_t(x)`, the time-`t` flow of `ẋ = V(x)`.
pub fn flow_map(field: &impl VectorField, t: f64, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    ode::integrate(|y: &Vector3<f64>| field.evaluate(y), *x, t, tolerance())
}

/// `Φ_t(x)` together with its Jacobian `DΦ_t(x)`, from the variational equation.
pub fn flow_map_with_jacobian(
    field: &impl VectorField,
    t: f64,
    x: &Vector3<f64>,
) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let mut y0 = SVector::<f64, 12>::zeros();
    y0.fixed_rows_mut::<3>(0).copy_from(x);
    for i in 0..3 {
        y0[3 + 4 * i] = 1.0;
    }
    let rhs = |y: &SVector<f64, 12>| {
        let p = Vector3::new(y[0], y[1], y[2]);
        let j = Matrix3::from_column_slice(&y.as_slice()[3..]);
        let mut out = SVector::<f64, 12>::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&field.evaluate(&p));
        let dj = field.jacobian(&p) * j;
        out.as_mut_slice()[3..].copy_from_slice(dj.as_slice());
        out
    };
    let y = ode::integrate(rhs, y0, t, tolerance())?;
    Ok((
        Vector3::new(y[0], y[1], y[2]),
        Matrix3::from_column_slice(&y.as_slice()[3..]),
    ))
}

fn spherical_angles(y: &Vector3<f64>) -> (f64, f64) {
    let r = y.norm();
    let theta = (y[2] / r).clamp(-1.0, 1.0).acos();
    let mut phi = y[1].atan2(y[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (theta, phi)
}

// Candidate radii per ray when scanning for sign changes.
const RAY_SAMPLES: usize = 24;

/// The image `Φ_t(Σ)` as a radial graph on the same grid.
///
/// Along each grid direction `q` the radius `r` solves `|y| = f(y/|y|)` with
/// `y = Φ_{-t}(r q)`, where `f` is evaluated through its harmonic expansion.
/// The search interval is taken from the mapped sample points; more than one
/// root on a ray, or none, means the image is not star-shaped about the origin.
pub fn pushforward_surface(
    field: &impl VectorField,
    t: f64,
    surface: &StarShapedHypersurface,
) -> Result<StarShapedHypersurface> {
    let grid = surface.grid().clone();
    let f = surface.radius().values();
    if t == 0.0 {
        return StarShapedHypersurface::from_values(grid, f.to_vec());
    }
    let spectrum = surface.radius().spectrum();
    let scratch_len = tri_len(spectrum.lmax());

    let mapped: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| flow_map(field, t, &(grid.direction(k) * f[k])).map(|y| y.norm()))
        .collect::<Result<_>>()?;
    let (lo, hi) = mapped
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    let mean = mapped.iter().sum::<f64>() / mapped.len() as f64;
    let (lo, hi) = (0.8 * lo, 1.25 * hi);
    let ambiguity = 1e-6 * mean;

    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; scratch_len], vec![0.0; scratch_len]),
            |(p, dp), k| {
                let q = grid.direction(k);
                let mut gap = |r: f64| -> Result<f64> {
                    let y = flow_map(field, -t, &(q * r))?;
                    let (theta, phi) = spherical_angles(&y);
                    Ok(y.norm() - spectrum.evaluate_with(theta, phi, p, dp))
                };
                let radii: Vec<f64> = (0..RAY_SAMPLES)
                    .map(|i| lo + (hi - lo) * i as f64 / (RAY_SAMPLES - 1) as f64)
                    .collect();
                let gaps: Vec<f64> = radii.iter().map(|r| gap(*r)).collect::<Result<_>>()?;
                let brackets: Vec<usize> = (0..RAY_SAMPLES - 1)
                    .filter(|&i| gaps[i] == 0.0 || gaps[i].signum() != gaps[i + 1].signum())
                    .collect();
                let Some(&first) = brackets.first() else {
                    return Err(Error::NotStarShaped {
                        node: k,
                        detail: format!("no intersection with the ray in [{lo:.6e}, {hi:.6e}]"),
                    });
                };
                let root = refine(&mut gap, radii[first], radii[first + 1], gaps[first], gaps[first + 1])?;
                for &i in &brackets[1..] {
                    let other = refine(&mut gap, radii[i], radii[i + 1], gaps[i], gaps[i + 1])?;
                    if (other - root).abs() > ambiguity {
                        return Err(Error::NotStarShaped {
                            node: k,
                            detail: format!("ray meets the surface at radii {root:.6e} and {other:.6e}"),
                        });
                    }
                }
                Ok(root)
            },
        )
        .collect::<Result<_>>()?;
    StarShapedHypersurface::from_values(grid, values)
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn refine(g: &mut impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> Result<f64> {
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    let tol = 1e-14 * b.abs().max(1.0);
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * gb - b * ga) / (gb - ga);
        if (b - a).abs() < tol {
            return Ok(c);
        }
        let gc = g(c)?;
        if gc == 0.0 {
            return Ok(c);
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
        if gc.abs() < 1e-15 * c.abs() {
            return Ok(c);
        }
    }
    Ok(0.5 * (a + b))
}

/// Outcome of the structural check that every component of `V` is quadratic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticReport {
    pub probes: usize,
    /// Largest third directional difference quotient.
    pub max_third_difference: f64,
    /// Largest deviation of `D_iD_jV^k` from `δ_jk D_iα + δ_ik D_jα - δ_ij D_kα`.
    pub max_second_derivative_error: f64,
    pub passed: bool,
}

/// Probe `field` at random points for vanishing third derivatives and the
/// second-derivative identity of conformal Killing fields.
pub fn component_quadratic_check(field: &impl VectorField, rng: &mut impl Rng, probes: usize) -> QuadraticReport {
    let h = 1e-2;
    let e = |i: usize| Vector3::ith(i, 1.0);
    let mut third: f64 = 0.0;
    let mut second: f64 = 0.0;
    for _ in 0..probes {
        let x = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let dir = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let at = |s: f64| field.evaluate(&(x + dir * s));
        let d3 = (at(2.0 * h) - at(h) * 3.0 + at(0.0) * 3.0 - at(-h)) / (h * h * h);
        third = third.max(d3.amax());

        // Dα from the divergence, by central differences (exact for affine α).
        let grad_alpha = Vector3::from_fn(|i, _| {
            (field.conformal_factor(&(x + e(i) * h)) - field.conformal_factor(&(x - e(i) * h))) / (2.0 * h)
        });
        for i in 0..3 {
            for j in 0..3 {
                let d2 = (field.evaluate(&(x + (e(i) + e(j)) * h)) - field.evaluate(&(x + (e(i) - e(j)) * h))
                    - field.evaluate(&(x + (e(j) - e(i)) * h))
                    + field.evaluate(&(x - (e(i) + e(j)) * h)))
                    / (4.0 * h * h);
                for k in 0..3 {
                    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let expect = delta(j, k) * grad_alpha[i] + delta(i, k) * grad_alpha[j] - delta(i, j) * grad_alpha[k];
                    second = second.max((d2[k] - expect).abs());
                }
            }
        }
    }
    QuadraticReport {
        probes,
        max_third_difference: third,
        max_second_derivative_error: second,
        passed: third < 1e-6 && second < 1e-6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn special_conformal_hand_value() {
        let v = ConformalKillingField::special([1.0, 0.0, 0.0]);
        let x = Vector3::new(1.0, 1.0, 0.0);
        assert_eq!(v.evaluate(&x), Vector3::new(0.0, 2.0, 0.0));
        assert_eq!(v.divergence(&Vector3::new(0.7, -2.0, 3.0)), 6.0 * 0.7);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let v = ConformalKillingField::random(&mut rng, 1.0);
            let x = Vector3::new(0.3, -0.4, 0.8);
            let j = v.jacobian(&x);
            let h = 1e-6;
            for c in 0..3 {
                let e = Vector3::ith(c, h);
                let fd = (v.evaluate(&(x + e)) - v.evaluate(&(x - e))) / (2.0 * h);
                assert!((fd - j.column(c)).amax() < 1e-8);
            }
            assert!((j.trace() - v.divergence(&x)).abs() < 1e-13);
            assert!(v.killing_residual(&x) < 1e-12);
        }
    }

    #[test]
    fn parameter_round_trip() {
        let p = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(ConformalKillingField::from_parameters(&p).parameters(), p);
        let s = ConformalKillingField::from_parameters(&p).skew();
        assert_eq!(s + s.transpose(), Matrix3::zeros());
    }

    #[test]
    fn normal_basis_is_linear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = ConformalKillingField::random(&mut rng, 1.0);
        let x = Vector3::new(0.2, 0.5, -0.9);
        let nu = Vector3::new(1.0, 2.0, 2.0) / 3.0;
        let basis = ConformalKillingField::normal_basis(&x, &nu);
        let lin: f64 = basis.iter().zip(v.parameters()).map(|(a, b)| a * b).sum();
        assert!((lin - v.evaluate(&x).dot(&nu)).abs() < 1e-14);
    }

    #[test]
    fn conjugation_intertwines_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = ConformalKillingField::random(&mut rng, 1.0);
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0).into_inner();
        let w = v.conjugated(&r);
        let x = Vector3::new(0.4, 0.1, -0.6);
        assert!((w.evaluate(&(r * x)) - r * v.evaluate(&x)).amax() < 1e-14);
    }

    #[test]
    fn json_field_names() {
        let v = ConformalKillingField::dilation(0.5);
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"S_lower\""));
        let back: ConformalKillingField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
