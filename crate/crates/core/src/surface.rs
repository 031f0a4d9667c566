//! Star-shaped hypersurfaces `Σ = {f(p) p : p ∈ S²}` and their extrinsic
//! geometry.
//!
//! Every quantity is computed from `u = log f` and its covariant derivatives
//! on the round sphere:
//!
//! ```text
//! g_ij  = f² (σ_ij + u_i u_j)
//! g^ij  = f⁻² (σ^ij - u^i u^j / W²),          W² = 1 + |∇u|²
//! dμ    = f^n W dμ_{S^n}
//! ν     = (p - u^k ∂_k p) / W                  (outward)
//! h_ij  = (f / W) (σ_ij + u_i u_j - ∇_i∇_j u)
//! ```
//!
//! With this orientation round spheres have `H = n / R > 0`.

use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{hessian_components, Grid, GridSpec, ScalarField, Sym2};
use crate::symmetric;

/// Radii below this are treated as a collapsed surface.
pub const RADIUS_FLOOR: f64 = 1e-8;

/// Largest admissible condition number of the induced metric, measured in a
/// frame orthonormal for the round metric.
pub const MAX_METRIC_CONDITION: f64 = 1e8;

/// Pointwise curvature formulas, written for a general dimension `n`.
///
/// The grid only discretizes `n = 2`; the same functions evaluated with `n = 1`
/// give the curvature of a closed polar curve.
pub mod pointwise {
    /// `f^n √(1 + |∇ log f|²)`.
    pub fn area_density(n: usize, f: f64, grad_log_sq: f64) -> f64 {
        f.powi(n as i32) * (1.0 + grad_log_sq).sqrt()
    }

    /// Mean curvature of a radial graph from the derivatives of `u = log f`:
    /// `H = [n - Δu + u^i u^j ∇_i∇_j u / W²] / (f W)`.
    pub fn mean_curvature(n: usize, f: f64, grad_log_sq: f64, laplacian_log: f64, hess_log_grad_grad: f64) -> f64 {
        let w2 = 1.0 + grad_log_sq;
        (n as f64 - laplacian_log + hess_log_grad_grad / w2) / (f * w2.sqrt())
    }

    /// Mean curvature of the inverted surface predicted from the original one:
    /// `H̃ = -f² H + 2 n f / W`.
    pub fn inverted_mean_curvature(n: usize, f: f64, h: f64, grad_log_sq: f64) -> f64 {
        -f * f * h + 2.0 * n as f64 * f / (1.0 + grad_log_sq).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct StarShapedHypersurface {
    radius: ScalarField,
    // Kept so that inversion is an exact involution.
    reciprocal: ScalarField,
}

impl StarShapedHypersurface {
    pub fn new(radius: ScalarField) -> Result<Self> {
        if let Some((node, &value)) = radius
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| **v <= RADIUS_FLOOR)
        {
            return Err(Error::DegenerateSurface {
                node,
                value,
                floor: RADIUS_FLOOR,
            });
        }
        let reciprocal = radius.map(|v| 1.0 / v);
        Ok(StarShapedHypersurface { radius, reciprocal })
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        StarShapedHypersurface::new(ScalarField::new(grid, values)?)
    }

    /// Intrinsic dimension `n` of the hypersurface.
    pub fn dim(&self) -> usize {
        2
    }

    pub fn radius(&self) -> &ScalarField {
        &self.radius
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.radius.grid()
    }

    pub fn spec(&self) -> GridSpec {
        self.radius.spec()
    }

    pub fn max_radius(&self) -> f64 {
        self.radius.max()
    }

    pub fn min_radius(&self) -> f64 {
        self.radius.min()
    }

    /// `max f / min f`.
    pub fn oscillation(&self) -> f64 {
        self.max_radius() / self.min_radius()
    }

    /// Inversion about the unit sphere, `f ↦ 1/f`.
    pub fn invert(&self) -> StarShapedHypersurface {
        StarShapedHypersurface {
            radius: self.reciprocal.clone(),
            reciprocal: self.radius.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> Result<StarShapedHypersurface> {
        StarShapedHypersurface::new(self.radius.map(|v| c * v))
    }

    pub fn geometry(&self) -> Result<GeometryBundle> {
        GeometryBundle::compute(self)
    }

    pub fn area(&self) -> Result<f64> {
        Ok(self.geometry()?.area())
    }

    pub fn sigma_integral(&self, k: usize) -> Result<f64> {
        self.geometry()?.sigma_integral(k)
    }
}

/// Per-node extrinsic geometry of a radial graph.
#[derive(Debug, Clone)]
pub struct GeometryBundle {
    grid: Arc<Grid>,
    n: usize,
    pub radius: Vec<f64>,
    /// `|∇ log f|²` in the round metric.
    pub grad_log_sq: Vec<f64>,
    /// Covector `∂_i log f`.
    pub grad_log: Vec<[f64; 2]>,
    /// `∇_i∇_j log f`.
    pub hess_log: Vec<Sym2>,
    pub laplacian_log: Vec<f64>,
    pub metric: Vec<Sym2>,
    pub metric_inverse: Vec<Sym2>,
    /// `dμ / dμ_{S²}`.
    pub area_density: Vec<f64>,
    pub normal: Vec<Vector3<f64>>,
    pub position: Vec<Vector3<f64>>,
    pub second_form: Vec<Sym2>,
    /// Mixed shape operator `h_i^j = g^{jk} h_ki`, row `i`, column `j`.
    pub shape: Vec<[[f64; 2]; 2]>,
    pub mean_curvature: Vec<f64>,
    /// `|A|²`.
    pub norm_a_sq: Vec<f64>,
    /// `|A°|² = |A|² - H²/n`.
    pub traceless_norm_sq: Vec<f64>,
    /// Principal curvatures, ascending.
    pub principal: Vec<[f64; 2]>,
    /// `[σ_0, σ_1, σ_2]` of the principal curvatures.
    pub sigma: Vec<[f64; 3]>,
}

struct NodeForms {
    grad_sq: f64,
    w: f64,
    g: Sym2,
    g_inv: Sym2,
    h: Sym2,
    m: [[f64; 2]; 2],
    kappa: [f64; 2],
}

/// Fundamental forms at one node from `f` and the chart derivatives of `log f`.
fn node_forms(grid: &Grid, k: usize, fk: f64, ut: f64, up: f64, hess_log: &Sym2) -> Result<NodeForms> {
    let s = grid.sin_theta(k);
    let s2 = s * s;
    if !(ut.is_finite() && up.is_finite()) {
        return Err(Error::Resolution {
            node: k,
            detail: "non-finite derivative of log f".into(),
        });
    }
    let grad_sq = ut * ut + up * up / s2;
    let w2 = 1.0 + grad_sq;
    // Eigenvalues of σ^{-1/2} g σ^{-1/2} / f² are 1 and W².
    if w2 > MAX_METRIC_CONDITION {
        return Err(Error::Resolution {
            node: k,
            detail: format!("metric condition number {w2:e} exceeds {MAX_METRIC_CONDITION:e}"),
        });
    }
    let w = w2.sqrt();
    let f2 = fk * fk;

    let sigma_ij = Sym2::new(1.0, 0.0, s2);
    let du_du = Sym2::new(ut * ut, ut * up, up * up);
    let g = sigma_ij.add(&du_du).scale(f2);
    let (vt, vp) = (ut, up / s2);
    let g_inv = Sym2::new(1.0 - vt * vt / w2, -vt * vp / w2, 1.0 / s2 - vp * vp / w2).scale(1.0 / f2);
    let h = sigma_ij.add(&du_du).sub(hess_log).scale(fk / w);

    let m = g_inv.matmul(&h);
    let trace = m[0][0] + m[1][1];
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let disc = (half_diff * half_diff + m[0][1] * m[1][0]).max(0.0).sqrt();
    Ok(NodeForms {
        grad_sq,
        w,
        g,
        g_inv,
        h,
        m,
        kappa: [0.5 * trace - disc, 0.5 * trace + disc],
    })
}

/// `|∇ log f|²` and the principal curvatures at every node, without the rest
/// of the bundle. This is all a flow step needs.
pub(crate) fn graph_curvatures(grid: &Grid, f: &[f64]) -> Result<Vec<(f64, [f64; 2])>> {
    let log_f: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let d = grid.derivatives(&log_f);
    let hess = hessian_components(grid, &d);
    (0..grid.len())
        .map(|k| node_forms(grid, k, f[k], d.d_theta[k], d.d_phi[k], &hess[k]).map(|n| (n.grad_sq, n.kappa)))
        .collect()
}

impl GeometryBundle {
    fn compute(surface: &StarShapedHypersurface) -> Result<GeometryBundle> {
        let grid = surface.grid().clone();
        let n = surface.dim();
        let f = surface.radius.values();
        let log_f: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let d = grid.derivatives(&log_f);
        let hess = hessian_components(&grid, &d);

        let len = grid.len();
        let mut out = GeometryBundle {
            grid: grid.clone(),
            n,
            radius: f.to_vec(),
            grad_log_sq: Vec::with_capacity(len),
            grad_log: Vec::with_capacity(len),
            hess_log: hess,
            laplacian_log: d.laplacian.clone(),
            metric: Vec::with_capacity(len),
            metric_inverse: Vec::with_capacity(len),
            area_density: Vec::with_capacity(len),
            normal: Vec::with_capacity(len),
            position: Vec::with_capacity(len),
            second_form: Vec::with_capacity(len),
            shape: Vec::with_capacity(len),
            mean_curvature: Vec::with_capacity(len),
            norm_a_sq: Vec::with_capacity(len),
            traceless_norm_sq: Vec::with_capacity(len),
            principal: Vec::with_capacity(len),
            sigma: Vec::with_capacity(len),
        };

        for k in 0..len {
            let fk = f[k];
            let (ut, up) = (d.d_theta[k], d.d_phi[k]);
            let NodeForms {
                grad_sq,
                w,
                g,
                g_inv,
                h,
                m,
                kappa,
            } = node_forms(&grid, k, fk, ut, up, &out.hess_log[k])?;
            let s = grid.sin_theta(k);
            let trace = m[0][0] + m[1][1];
            let norm_a_sq = m[0][0] * m[0][0] + 2.0 * m[0][1] * m[1][0] + m[1][1] * m[1][1];
            let e = symmetric::elementary(&kappa);

            let p = grid.direction(k);
            let nu = (p - grid.e_theta(k) * ut - grid.e_phi(k) * (up / s)) / w;

            out.grad_log_sq.push(grad_sq);
            out.grad_log.push([ut, up]);
            out.metric.push(g);
            out.metric_inverse.push(g_inv);
            out.area_density.push(pointwise::area_density(n, fk, grad_sq));
            out.normal.push(nu);
            out.position.push(p * fk);
            out.second_form.push(h);
            // Mixed tensor h_i^j: transpose of (g^{-1} h).
            out.shape.push([[m[0][0], m[1][0]], [m[0][1], m[1][1]]]);
            out.mean_curvature.push(trace);
            out.norm_a_sq.push(norm_a_sq);
            out.traceless_norm_sq.push(norm_a_sq - trace * trace / n as f64);
            out.principal.push(kappa);
            out.sigma.push([e[0], e[1], e[2]]);
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.radius.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radius.is_empty()
    }

    /// `∫_Σ φ dμ` for a per-node integrand.
    pub fn integrate(&self, integrand: impl Fn(usize) -> f64) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.area_density)
            .enumerate()
            .map(|(k, (w, a))| w * a * integrand(k))
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `∫_Σ σ_k dμ` for `0 <= k <= n`.
    pub fn sigma_integral(&self, k: usize) -> Result<f64> {
        if k > self.n {
            return Err(Error::OrderOutOfRange {
                k,
                range: format!("0..={}", self.n),
            });
        }
        Ok(self.integrate(|i| self.sigma[i][k]))
    }

    /// Wrap per-node values as a field on the parameter sphere.
    pub fn field(&self, values: Vec<f64>) -> ScalarField {
        ScalarField::new(self.grid.clone(), values).expect("per-node values on own grid")
    }

    pub fn mean_curvature_field(&self) -> ScalarField {
        self.field(self.mean_curvature.clone())
    }

    /// `H` from the closed-form scalar expression instead of the trace of the shape operator.
    pub fn mean_curvature_closed_form(&self, k: usize) -> f64 {
        let [ut, up] = self.grad_log[k];
        let s2 = self.grid.sin_theta(k).powi(2);
        let hess = self.hess_log[k];
        let contraction = ut * ut * hess.tt + 2.0 * ut * (up / s2) * hess.tp + (up / s2) * (up / s2) * hess.pp;
        pointwise::mean_curvature(self.n, self.radius[k], self.grad_log_sq[k], self.laplacian_log[k], contraction)
    }

    /// Surface gradient `g^{ij} ∂_j φ` paired with `∂_i ψ`: `⟨∇φ, ∇ψ⟩_g` per node.
    pub fn gradient_pairing(&self, a: &ScalarField, b: &ScalarField) -> Vec<f64> {
        let ga = a.gradient();
        let gb = b.gradient();
        self.metric_inverse
            .iter()
            .zip(ga.iter().zip(&gb))
            .map(|(gi, ([at, ap], [bt, bp]))| gi.tt * at * bt + gi.tp * (at * bp + ap * bt) + gi.pp * ap * bp)
            .collect()
    }
}

/// Pointwise comparison of `H̃` computed from the inverted surface with the
/// prediction `-f² H + 2 n f / W` from the original surface.
#[derive(Debug, Clone)]
pub struct InversionCheck {
    pub residual: ScalarField,
    pub sup: f64,
}

pub fn inversion_mean_curvature_check(surface: &StarShapedHypersurface) -> Result<InversionCheck> {
    let geo = surface.geometry()?;
    let inv = surface.invert().geometry()?;
    let n = geo.dim();
    let residual: Vec<f64> = (0..geo.len())
        .map(|k| {
            let predicted =
                pointwise::inverted_mean_curvature(n, geo.radius[k], geo.mean_curvature[k], geo.grad_log_sq[k]);
            inv.mean_curvature[k] - predicted
        })
        .collect();
    let residual = geo.field(residual);
    let sup = residual.sup_norm();
    Ok(InversionCheck { residual, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    fn spec(nt: usize) -> GridSpec {
        GridSpec::new(nt, 2 * nt).unwrap()
    }

    #[test]
    fn round_sphere_closed_forms() {
        let r = 1.7;
        let geo = generate::sphere(spec(16), r).unwrap().geometry().unwrap();
        for k in 0..geo.len() {
            assert!((geo.mean_curvature[k] - 2.0 / r).abs() < 1e-12);
            assert!((geo.principal[k][0] - 1.0 / r).abs() < 1e-12);
            assert!((geo.principal[k][1] - 1.0 / r).abs() < 1e-12);
            assert!((geo.sigma[k][2] - 1.0 / (r * r)).abs() < 1e-12);
            assert!(geo.traceless_norm_sq[k].abs() < 1e-12);
            assert!(((geo.normal[k].norm()) - 1.0).abs() < 1e-14);
            assert!((geo.normal[k] - geo.grid().direction(k)).norm() < 1e-13);
        }
        let area = geo.area();
        assert!((area / (4.0 * std::f64::consts::PI * r * r) - 1.0).abs() < 1e-12);
        assert!((geo.sigma_integral(1).unwrap() - 8.0 * std::f64::consts::PI * r).abs() < 1e-10);
        assert!((geo.sigma_integral(2).unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-11);
        assert!(geo.sigma_integral(3).is_err());
    }

    #[test]
    fn degenerate_radius_is_rejected() {
        let grid = Grid::new(spec(8)).unwrap();
        let mut values = vec![1.0; grid.len()];
        values[5] = 0.0;
        let err = StarShapedHypersurface::from_values(grid, values).unwrap_err();
        assert!(matches!(err, Error::DegenerateSurface { node: 5, .. }));
    }

    #[test]
    fn inversion_is_an_exact_involution() {
        let s = generate::harmonic(spec(16), 1.0, &[(2, 2, 0.1), (3, -1, 0.05)]).unwrap();
        let back = s.invert().invert();
        assert_eq!(back.radius().values(), s.radius().values());
        let inv = generate::sphere(spec(8), 4.0).unwrap().invert();
        assert!(inv.radius().values().iter().all(|v| *v == 0.25));
    }

    #[test]
    fn closed_form_mean_curvature_agrees_with_trace() {
        let s = generate::harmonic(spec(24), 1.0, &[(2, 2, 0.1), (3, 1, 0.05)]).unwrap();
        let geo = s.geometry().unwrap();
        for k in 0..geo.len() {
            assert!((geo.mean_curvature_closed_form(k) - geo.mean_curvature[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn invariant_identities_hold_pointwise() {
        let s = generate::spheroid(spec(24), 1.0, 0.6).unwrap();
        let geo = s.geometry().unwrap();
        for k in 0..geo.len() {
            let [k1, k2] = geo.principal[k];
            assert!(k1 <= k2);
            assert!((k1 + k2 - geo.mean_curvature[k]).abs() < 1e-12);
            assert!((k1 * k1 + k2 * k2 - geo.norm_a_sq[k]).abs() < 1e-11);
            assert!((k1 * k2 - geo.sigma[k][2]).abs() < 1e-12);
            assert_eq!(geo.sigma[k][0], 1.0);
            assert!((geo.normal[k].norm() - 1.0).abs() < 1e-10);
            assert!(geo.metric[k].det() > 0.0);
        }
    }

    #[test]
    fn polar_curve_oracle_for_one_dimensional_formula() {
        // r(φ) = 1 + 0.2 cos 3φ; classical curvature (r² + 2r'² - r r'')/(r² + r'²)^{3/2}.
        for i in 0..50 {
            let phi = i as f64 * 0.125;
            let r = 1.0 + 0.2 * (3.0 * phi).cos();
            let r1 = -0.6 * (3.0 * phi).sin();
            let r2 = -1.8 * (3.0 * phi).cos();
            let classical = (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5);
            let u1 = r1 / r;
            let u2 = (r2 * r - r1 * r1) / (r * r);
            let h = pointwise::mean_curvature(1, r, u1 * u1, u2, u1 * u1 * u2);
            assert!((h - classical).abs() < 1e-13, "{h} vs {classical}");
            let ds = pointwise::area_density(1, r, u1 * u1);
            assert!((ds - (r * r + r1 * r1).sqrt()).abs() < 1e-14);
        }
    }
}
