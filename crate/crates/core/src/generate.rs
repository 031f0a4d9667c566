//! Test surfaces.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{legendre_with_derivative, tri, tri_len, Grid, GridSpec, ScalarField};
use crate::surface::StarShapedHypersurface;

/// Real orthonormal spherical harmonic `Y_lm`.
///
/// `m > 0` selects `√2 P̄_l^m cos mφ`, `m < 0` selects `√2 P̄_l^|m| sin |m|φ`.
/// Each has unit `L²(S²)` norm.
pub fn real_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let mut p = vec![0.0; tri_len(l)];
    let mut dp = vec![0.0; tri_len(l)];
    legendre_with_derivative(l, theta.cos(), theta.sin().abs(), &mut p, &mut dp);
    let v = p[tri(l, am)];
    match m {
        0 => v,
        m if m > 0 => std::f64::consts::SQRT_2 * v * (am as f64 * phi).cos(),
        _ => std::f64::consts::SQRT_2 * v * (am as f64 * phi).sin(),
    }
}

/// Radial graph of `f(θ, φ)`.
pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<StarShapedHypersurface> {
    let grid = Grid::new(spec)?;
    StarShapedHypersurface::new(ScalarField::from_fn(grid, f)?)
}

pub fn sphere(spec: GridSpec, radius: f64) -> Result<StarShapedHypersurface> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("sphere radius must be positive, got {radius}")));
    }
    from_fn(spec, |_, _| radius)
}

/// Spheroid with equatorial semi-axis `a` and polar semi-axis `c`,
/// `f(θ) = (sin²θ/a² + cos²θ/c²)^{-1/2}`.
pub fn spheroid(spec: GridSpec, a: f64, c: f64) -> Result<StarShapedHypersurface> {
    if !(a > 0.0 && c > 0.0 && a.is_finite() && c.is_finite()) {
        return Err(Error::InvalidInput(format!("spheroid axes must be positive, got a={a}, c={c}")));
    }
    from_fn(spec, |t, _| {
        let (s, co) = t.sin_cos();
        (s * s / (a * a) + co * co / (c * c)).powf(-0.5)
    })
}

/// `f = base + Σ amp · Y_lm` for terms `(l, m, amp)`.
pub fn harmonic(spec: GridSpec, base: f64, terms: &[(usize, i64, f64)]) -> Result<StarShapedHypersurface> {
    if let Some(&(l, m, _)) = terms.iter().find(|(l, m, _)| m.unsigned_abs() as usize > *l) {
        return Err(Error::InvalidInput(format!("harmonic term needs |m| <= l, got l={l}, m={m}")));
    }
    from_fn(spec, |t, p| {
        base + terms
            .iter()
            .map(|&(l, m, amp)| amp * real_harmonic(l, m, t, p))
            .sum::<f64>()
    })
}

/// The same surface sampled on another grid through its harmonic expansion.
/// Coarsening truncates degrees above the new `lmax`.
pub fn resample(surface: &StarShapedHypersurface, spec: GridSpec) -> Result<StarShapedHypersurface> {
    if spec == surface.spec() {
        return Ok(surface.clone());
    }
    let spectrum = surface.radius().spectrum();
    let grid = Grid::new(spec)?;
    let n = tri_len(spectrum.lmax());
    let (mut p, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let values = (0..grid.len())
        .map(|k| spectrum.evaluate_with(grid.theta(k), grid.phi(k), &mut p, &mut dp))
        .collect();
    StarShapedHypersurface::from_values(grid, values)
}

/// Round sphere of radius `r` centred at `center`, which must lie inside it.
pub fn translated_sphere(spec: GridSpec, radius: f64, center: Vector3<f64>) -> Result<StarShapedHypersurface> {
    if !(center.norm() < radius) {
        return Err(Error::InvalidInput(
            "translated sphere must contain the origin to be star-shaped".into(),
        ));
    }
    let c2 = center.norm_squared();
    from_fn(spec, |t, p| {
        let (st, ct) = t.sin_cos();
        let dir = Vector3::new(st * p.cos(), st * p.sin(), ct);
        let pc = dir.dot(&center);
        pc + (pc * pc - c2 + radius * radius).sqrt()
    })
}
