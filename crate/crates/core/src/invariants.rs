//! Integral and pointwise invariants of star-shaped hypersurfaces.
//!
//! Signs follow the outward normal of [`crate::surface`]: a surface moving
//! with normal speed `φ` along `ν` has `∂_t H = -Δφ - φ|A|²` and
//! `∂_t dμ = φ H dμ`.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::conformal::VectorField;
use crate::error::{Error, Result};
use crate::grid::{CovariantTensor2, ScalarField, Sym2};
use crate::surface::{GeometryBundle, StarShapedHypersurface};
use crate::symmetric::binomial;

/// `|Sⁿ|` for `n = 1, 2` and beyond via the gamma recursion.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_area(n - 2),
    }
}

fn require_mean_convex(geo: &GeometryBundle) -> Result<()> {
    match geo.mean_curvature.iter().enumerate().find(|(_, h)| !(**h > 0.0)) {
        Some((node, &h)) => Err(Error::MeanConvexity { node, h }),
        None => Ok(()),
    }
}

/// The tensor `E(a)` and its pointwise size.
#[derive(Debug, Clone)]
pub struct ETensor {
    pub a: f64,
    pub tensor: CovariantTensor2,
    /// Eigenvalues of `g^{-1} E` per node, ascending.
    pub eigenvalues: Vec<[f64; 2]>,
    /// `max_nodes max_i |λ_i|`.
    pub sup_norm: f64,
    /// Largest gap between the tensor eigenvalues and
    /// `-(n/2)(κ_i - H/n)² - ((2an+1)/2)|A°|²`.
    pub eigenvalue_mismatch: f64,
}

/// `E_ij(a) = H h_ij + a H² g_ij - (n/2) h_ik g^{kl} h_lj - ((2an+1)/2) |A|² g_ij`.
///
/// For `2an + 1 >= 0` it vanishes exactly at umbilic points.
pub fn e_tensor(geo: &GeometryBundle, a: f64) -> Result<ETensor> {
    let n = geo.dim() as f64;
    let c = (2.0 * a * n + 1.0) / 2.0;
    let mut components = Vec::with_capacity(geo.len());
    let mut eigenvalues = Vec::with_capacity(geo.len());
    let mut sup: f64 = 0.0;
    let mut mismatch: f64 = 0.0;
    for k in 0..geo.len() {
        let (g, gi, h) = (geo.metric[k], geo.metric_inverse[k], geo.second_form[k]);
        let hh = geo.mean_curvature[k];
        let a2 = geo.norm_a_sq[k];
        let hgh = {
            let m = h.matmul(&gi);
            let t = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]) * Matrix2::new(h.tt, h.tp, h.tp, h.pp);
            Sym2::new(t[(0, 0)], 0.5 * (t[(0, 1)] + t[(1, 0)]), t[(1, 1)])
        };
        let e = h
            .scale(hh)
            .add(&g.scale(a * hh * hh))
            .sub(&hgh.scale(0.5 * n))
            .sub(&g.scale(c * a2));
        components.push(e);

        let m = gi.matmul(&e);
        let tr = m[0][0] + m[1][1];
        let half = 0.5 * (m[0][0] - m[1][1]);
        let disc = (half * half + m[0][1] * m[1][0]).max(0.0).sqrt();
        let lam = [0.5 * tr - disc, 0.5 * tr + disc];
        sup = sup.max(lam[0].abs()).max(lam[1].abs());

        let mut expect = geo.principal[k].map(|kap| -0.5 * n * (kap - hh / n).powi(2) - c * geo.traceless_norm_sq[k]);
        expect.sort_by(|x, y| x.total_cmp(y));
        mismatch = mismatch.max((expect[0] - lam[0]).abs()).max((expect[1] - lam[1]).abs());
        eigenvalues.push(lam);
    }
    Ok(ETensor {
        a,
        tensor: CovariantTensor2::new(geo.grid().clone(), components)?,
        eigenvalues,
        sup_norm: sup,
        eigenvalue_mismatch: mismatch,
    })
}

/// `W = ∫ H^n dμ`.
pub fn willmore(geo: &GeometryBundle) -> Result<f64> {
    require_mean_convex(geo)?;
    let n = geo.dim() as i32;
    Ok(geo.integrate(|k| geo.mean_curvature[k].powi(n)))
}

/// `dW/dt` for the normal variation `∂_t F = φ ν`:
/// `∫ n(n-1) H^{n-2} ⟨∇H, ∇φ⟩ - n φ H^{n-1} |A°|² dμ`.
pub fn willmore_rate(geo: &GeometryBundle, speed: &ScalarField) -> Result<f64> {
    require_mean_convex(geo)?;
    let h = geo.mean_curvature_field();
    h.ensure_same_grid(speed)?;
    let n = geo.dim() as f64;
    let ni = geo.dim() as i32;
    let pairing = geo.gradient_pairing(&h, speed);
    let phi = speed.values();
    Ok(geo.integrate(|k| {
        let hk = geo.mean_curvature[k];
        n * (n - 1.0) * hk.powi(ni - 2) * pairing[k] - n * phi[k] * hk.powi(ni - 1) * geo.traceless_norm_sq[k]
    }))
}

/// Rate of `W` along inverse mean curvature flow in closed form:
/// `∫ -n(n-1) H^{n-4} |∇H|² - n H^{n-2} |A°|² dμ`.
pub fn willmore_rate_imcf(geo: &GeometryBundle) -> Result<f64> {
    require_mean_convex(geo)?;
    let n = geo.dim() as f64;
    let ni = geo.dim() as i32;
    let h = geo.mean_curvature_field();
    let grad_sq = geo.gradient_pairing(&h, &h);
    Ok(geo.integrate(|k| {
        let hk = geo.mean_curvature[k];
        -n * (n - 1.0) * hk.powi(ni - 4) * grad_sq[k] - n * hk.powi(ni - 2) * geo.traceless_norm_sq[k]
    }))
}

fn positive_sigma_integral(geo: &GeometryBundle, k: usize) -> Result<f64> {
    let value = geo.sigma_integral(k)?;
    if !(value > 0.0) {
        return Err(Error::ConvexityClass { k, value });
    }
    Ok(value)
}

fn check_quotient_order(geo: &GeometryBundle, k: usize) -> Result<()> {
    let n = geo.dim();
    if k == 0 || k >= n {
        return Err(Error::OrderOutOfRange {
            k,
            range: format!("1..={}", n - 1),
        });
    }
    Ok(())
}

/// `Q_k = (∫σ_k dμ)^{1/(n-k)} / (∫σ_{k-1} dμ)^{1/(n-k+1)}` for `1 <= k < n`.
pub fn guan_li_q(geo: &GeometryBundle, k: usize) -> Result<f64> {
    check_quotient_order(geo, k)?;
    let n = geo.dim() as f64;
    let kf = k as f64;
    let top = positive_sigma_integral(geo, k)?;
    let bottom = positive_sigma_integral(geo, k - 1)?;
    Ok(top.powf(1.0 / (n - kf)) / bottom.powf(1.0 / (n - kf + 1.0)))
}

/// `|Σ|^{-(n-1)/n} ∫ H dμ`, the similarity-invariant quantity entering `Q̄`.
pub fn scale_free_q1(geo: &GeometryBundle) -> f64 {
    let n = geo.dim() as f64;
    geo.sigma_integral(1).expect("k = 1 <= n") / geo.area().powf((n - 1.0) / n)
}

/// Both sides of the Hsiung–Minkowski identity for a vector field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MinkowskiResidual {
    pub k: usize,
    /// `∫ α σ_k / C(n,k) dμ`.
    pub conformal_side: f64,
    /// `∫ ⟨V,ν⟩ σ_{k+1} / C(n,k+1) dμ`.
    pub normal_side: f64,
    pub residual: f64,
    /// `|residual| / (|conformal_side| + |normal_side|)`, zero when both vanish.
    pub relative: f64,
}

/// `∫ α_V σ_k/C(n,k) dμ - ∫ ⟨V,ν⟩ σ_{k+1}/C(n,k+1) dμ`, zero for closed `Σ` and
/// conformal `V`.
pub fn hsiung_minkowski_residual(geo: &GeometryBundle, field: &impl VectorField, k: usize) -> Result<MinkowskiResidual> {
    let n = geo.dim();
    if k >= n {
        return Err(Error::OrderOutOfRange {
            k,
            range: format!("0..={}", n - 1),
        });
    }
    let (ck, ck1) = (binomial(n, k), binomial(n, k + 1));
    let conformal_side = geo.integrate(|i| field.conformal_factor(&geo.position[i]) * geo.sigma[i][k] / ck);
    let normal_side =
        geo.integrate(|i| field.evaluate(&geo.position[i]).dot(&geo.normal[i]) * geo.sigma[i][k + 1] / ck1);
    let residual = conformal_side - normal_side;
    let scale = conformal_side.abs() + normal_side.abs();
    Ok(MinkowskiResidual {
        k,
        conformal_side,
        normal_side,
        residual,
        relative: if scale > 0.0 { residual.abs() / scale } else { 0.0 },
    })
}

/// `∫σ_l div V dμ / ∫σ_l dμ`.
fn weighted_divergence(geo: &GeometryBundle, field: &impl VectorField, l: usize) -> Result<f64> {
    let total = positive_sigma_integral(geo, l)?;
    Ok(geo.integrate(|i| geo.sigma[i][l] * field.divergence(&geo.position[i])) / total)
}

/// Difference of the `σ_{k-1}`- and `σ_k`-weighted averages of `div V`.
/// `Q_k` is stationary under the flow of `V` exactly when it vanishes.
pub fn condition_v(geo: &GeometryBundle, field: &impl VectorField, k: usize) -> Result<f64> {
    check_quotient_order(geo, k)?;
    Ok(weighted_divergence(geo, field, k - 1)? - weighted_divergence(geo, field, k)?)
}

/// `dQ_k/dt` when `Σ` moves by the flow of a conformal Killing field:
/// `-Q_k/(n+1) · condition_v`.
pub fn qk_rate(geo: &GeometryBundle, field: &impl VectorField, k: usize) -> Result<f64> {
    let q = guan_li_q(geo, k)?;
    let n = geo.dim() as f64;
    Ok(-q / (n + 1.0) * condition_v(geo, field, k)?)
}

/// `∫ σ_k x dμ / ∫ σ_k dμ`.
pub fn center_of_mass(geo: &GeometryBundle, k: usize) -> Result<Vector3<f64>> {
    let total = positive_sigma_integral(geo, k)?;
    let c = Vector3::from_fn(|j, _| geo.integrate(|i| geo.sigma[i][k] * geo.position[i][j]));
    Ok(c / total)
}

/// `Q̄ = Q₁(Σ) + Q₁(Σ̃)` with the two-sided bound of the inversion inequality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QbarReport {
    pub qbar: f64,
    pub lower: f64,
    pub upper: f64,
    pub q1: f64,
    pub q1_inverted: f64,
    /// `max f`.
    pub r_max: f64,
    /// `min f`.
    pub r_min: f64,
    /// `min(qbar - lower, upper - qbar)`.
    pub margin: f64,
    pub holds: bool,
}

pub fn qbar(surface: &StarShapedHypersurface) -> Result<QbarReport> {
    let geo = surface.geometry()?;
    let inv = surface.invert().geometry()?;
    qbar_from(surface, &geo, &inv)
}

/// As [`qbar`] with both geometries already computed.
pub fn qbar_from(surface: &StarShapedHypersurface, geo: &GeometryBundle, inv: &GeometryBundle) -> Result<QbarReport> {
    let n = surface.dim() as f64;
    let q1 = scale_free_q1(geo);
    let q1_inverted = scale_free_q1(inv);
    let qbar = q1 + q1_inverted;
    let (r_max, r_min) = (surface.max_radius(), surface.min_radius());
    let base = 2.0 * n * sphere_area(surface.dim()) / (geo.area() * inv.area()).powf((n - 1.0) / (2.0 * n));
    let e = 1.5 * (n - 1.0);
    let lower = (r_min / r_max).powf(e) * base;
    let upper = (r_max / r_min).powf(e) * base;
    // Spheres sit exactly on both bounds; allow round-off there.
    let slack = 1e-12 * qbar.abs();
    Ok(QbarReport {
        qbar,
        lower,
        upper,
        q1,
        q1_inverted,
        r_max,
        r_min,
        margin: (qbar - lower).min(upper - qbar),
        holds: lower <= qbar + slack && qbar <= upper + slack,
    })
}

/// Energies of one surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "W")]
    pub willmore: f64,
    /// Guan–Li quotients keyed by `k`.
    #[serde(rename = "Q")]
    pub q: BTreeMap<usize, f64>,
    #[serde(rename = "Qbar")]
    pub qbar: QbarReport,
    /// `sup |E(a)|` keyed by the decimal form of `a`.
    #[serde(rename = "E_sup")]
    pub e_sup: BTreeMap<String, f64>,
    pub area: f64,
    pub sigma_integrals: Vec<f64>,
    pub oscillation: f64,
}

/// `[-1/(2n), 0, 1]`.
pub fn default_a_values(n: usize) -> Vec<f64> {
    vec![-1.0 / (2.0 * n as f64), 0.0, 1.0]
}

pub fn energy_report(surface: &StarShapedHypersurface, a_values: &[f64]) -> Result<EnergyReport> {
    let geo = surface.geometry()?;
    let inv = surface.invert().geometry()?;
    let n = surface.dim();
    let mut q = BTreeMap::new();
    for k in 1..n {
        q.insert(k, guan_li_q(&geo, k)?);
    }
    let mut e_sup = BTreeMap::new();
    for &a in a_values {
        e_sup.insert(format!("{a}"), e_tensor(&geo, a)?.sup_norm);
    }
    Ok(EnergyReport {
        willmore: willmore(&geo)?,
        q,
        qbar: qbar_from(surface, &geo, &inv)?,
        e_sup,
        area: geo.area(),
        sigma_integrals: (0..=n).map(|k| geo.sigma_integral(k)).collect::<Result<_>>()?,
        oscillation: surface.oscillation(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::ConformalKillingField;
    use crate::generate;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn spec() -> GridSpec {
        GridSpec::new(24, 48).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-14);
    }

    #[test]
    fn sphere_values() {
        let s = generate::sphere(spec(), 1.5).unwrap();
        let geo = s.geometry().unwrap();
        assert!((willmore(&geo).unwrap() - 16.0 * PI).abs() < 1e-11);
        assert!((guan_li_q(&geo, 1).unwrap() - 4.0 * PI.sqrt()).abs() < 1e-12);
        assert!(guan_li_q(&geo, 2).is_err());
        for a in default_a_values(2) {
            assert!(e_tensor(&geo, a).unwrap().sup_norm < 1e-12);
        }
        let q = qbar(&s).unwrap();
        assert!((q.qbar - 8.0 * PI.sqrt()).abs() < 1e-11);
        assert!((q.lower - q.qbar).abs() < 1e-11 && (q.upper - q.qbar).abs() < 1e-11);
        assert!(q.holds);
    }

    #[test]
    fn dilation_minkowski_hand_value() {
        let s = generate::sphere(spec(), 2.0).unwrap();
        let r = hsiung_minkowski_residual(&s.geometry().unwrap(), &ConformalKillingField::dilation(1.0), 0).unwrap();
        assert!((r.conformal_side - 16.0 * PI).abs() < 1e-11);
        assert!((r.normal_side - 16.0 * PI).abs() < 1e-11);
    }

    #[test]
    fn e_tensor_hand_node() {
        // g = I, h = diag(2, 0), n = 2, a = 0: E = H h - h² - |A|²/2 g.
        let (h, g) = (Sym2::new(2.0, 0.0, 0.0), Sym2::new(1.0, 0.0, 1.0));
        let hh = h.matmul(&h);
        let e = h.scale(2.0).sub(&Sym2::new(hh[0][0], hh[0][1], hh[1][1])).sub(&g.scale(2.0));
        assert_eq!(e, Sym2::new(-2.0, 0.0, -2.0));
        for kappa in [2.0f64, 0.0] {
            assert_eq!(-(kappa - 1.0).powi(2) - 0.5 * 2.0, -2.0);
        }
    }
}
