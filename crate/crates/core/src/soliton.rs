//! Self-conformal solutions: surfaces whose normal speed `1/ρ(κ)` coincides
//! with the normal component of a conformal Killing field.
//!
//! Since `⟨V(x), ν⟩` is linear in the ten parameters of `V`, the best field in
//! the `L²(dμ)` sense solves a linear least-squares problem.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conformal::{ConformalKillingField, VectorField, PARAMETER_COUNT};
use crate::error::Result;
use crate::flow::normal_speed;
use crate::grid::ScalarField;
use crate::speed::SpeedFunction;
use crate::surface::GeometryBundle;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Singular values below this fraction of the largest are treated as zero.
const RANK_CUTOFF: f64 = 1e-9;

const GRAM_CONDITION_WARNING: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Soliton,
    NotSoliton,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolitonReport {
    pub residual_sup: f64,
    /// `(∫ r² dμ / |Σ|)^{1/2}`.
    pub residual_l2: f64,
    /// `∫ (1/ρ) dμ / |Σ|`.
    pub mean_speed: f64,
    /// `residual_l2 / mean_speed`, the quantity compared against `tolerance`.
    pub relative_l2: f64,
    pub fitted: Option<ConformalKillingField>,
    pub verdict: Verdict,
    pub tolerance: f64,
    /// Numerical rank of the design matrix.
    pub rank: Option<usize>,
    /// `(σ_max / σ_min)²` over the retained singular values.
    pub gram_condition: Option<f64>,
    pub warnings: Vec<String>,
}

/// `⟨V, ν⟩ - 1/ρ(κ)` per node.
pub fn residual(geo: &GeometryBundle, field: &impl VectorField, speed: &SpeedFunction) -> Result<ScalarField> {
    let target = normal_speed(geo, speed)?;
    let values = (0..geo.len())
        .map(|k| field.evaluate(&geo.position[k]).dot(&geo.normal[k]) - target.values()[k])
        .collect();
    Ok(geo.field(values))
}

fn verdict(relative: f64, tol: f64) -> Verdict {
    if relative < tol {
        Verdict::Soliton
    } else if relative > 100.0 * tol {
        Verdict::NotSoliton
    } else {
        Verdict::Inconclusive
    }
}

/// Residual norms and verdict for a given field.
pub fn report_for(
    geo: &GeometryBundle,
    field: &ConformalKillingField,
    speed: &SpeedFunction,
    tol: f64,
) -> Result<SolitonReport> {
    let r = residual(geo, field, speed)?;
    let target = normal_speed(geo, speed)?;
    let area = geo.area();
    let residual_l2 = (geo.integrate(|k| r.values()[k].powi(2)) / area).sqrt();
    let mean_speed = geo.integrate(|k| target.values()[k]) / area;
    let relative_l2 = residual_l2 / mean_speed;
    let mut warnings = Vec::new();
    if relative_l2 >= tol && relative_l2 <= 100.0 * tol {
        warnings.push("residual within two decades of the tolerance; refine the grid".into());
    }
    Ok(SolitonReport {
        residual_sup: r.sup_norm(),
        residual_l2,
        mean_speed,
        relative_l2,
        fitted: Some(*field),
        verdict: verdict(relative_l2, tol),
        tolerance: tol,
        rank: None,
        gram_condition: None,
        warnings,
    })
}

/// Least-squares conformal Killing field for the normal speed of `speed`.
///
/// When the fit is not unique (symmetric surfaces leave some generators
/// unobservable) the special-conformal part `b` is minimised first and the
/// full parameter norm second.
pub fn best_fit_ckf(geo: &GeometryBundle, speed: &SpeedFunction, tol: f64) -> Result<(ConformalKillingField, SolitonReport)> {
    let target = normal_speed(geo, speed)?;
    let weights = geo.grid().weights();
    let rows = geo.len();
    let mut a = DMatrix::<f64>::zeros(rows, PARAMETER_COUNT);
    let mut y = DVector::<f64>::zeros(rows);
    for k in 0..rows {
        let s = (weights[k] * geo.area_density[k]).sqrt();
        let basis = ConformalKillingField::normal_basis(&geo.position[k], &geo.normal[k]);
        for (j, v) in basis.iter().enumerate() {
            a[(k, j)] = s * v;
        }
        y[k] = s * target.values()[k];
    }

    let svd = a.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > RANK_CUTOFF * smax).collect();
    let drop: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= RANK_CUTOFF * smax).collect();

    let mut x0 = DVector::<f64>::zeros(PARAMETER_COUNT);
    for &i in &keep {
        let coeff = u.column(i).dot(&y) / sv[i];
        x0 += vt.row(i).transpose() * coeff;
    }

    // Null-space correction: x = x0 + N z with z minimising |P(x0 + N z)|,
    // P selecting b; the pseudo-inverse gives the smallest such z.
    let mut x = x0.clone();
    if !drop.is_empty() {
        let nmat = DMatrix::from_fn(PARAMETER_COUNT, drop.len(), |r, c| vt[(drop[c], r)]);
        let pn = nmat.rows(7, 3).into_owned();
        let px0 = x0.rows(7, 3).into_owned();
        let pinv = pn.clone().pseudo_inverse(RANK_CUTOFF * pn.amax().max(f64::MIN_POSITIVE)).expect("non-negative epsilon");
        let z = -(pinv * px0);
        x += nmat * z;
    }

    let params: [f64; PARAMETER_COUNT] = std::array::from_fn(|i| x[i]);
    let field = ConformalKillingField::from_parameters(&params);
    let mut report = report_for(geo, &field, speed, tol)?;
    let smin = keep.iter().map(|&i| sv[i]).fold(f64::INFINITY, f64::min);
    let gram_condition = (smax / smin).powi(2);
    if gram_condition > GRAM_CONDITION_WARNING {
        report
            .warnings
            .push(format!("Gram matrix condition number {gram_condition:.3e} exceeds {GRAM_CONDITION_WARNING:e}"));
    }
    if !drop.is_empty() {
        report.warnings.push(format!(
            "{} parameter direction(s) unobservable on this surface; minimum-norm representative returned",
            drop.len()
        ));
    }
    report.rank = Some(keep.len());
    report.gram_condition = Some(gram_condition);
    Ok((field, report))
}

/// Fit and judge: soliton below `tol`, not a soliton above `100 tol`.
pub fn classify(geo: &GeometryBundle, speed: &SpeedFunction, tol: f64) -> Result<SolitonReport> {
    best_fit_ckf(geo, speed, tol).map(|(_, r)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::grid::GridSpec;
    use nalgebra::Vector3;

    fn spec() -> GridSpec {
        GridSpec::new(16, 32).unwrap()
    }

    #[test]
    fn origin_sphere_is_a_self_expander() {
        let geo = generate::sphere(spec(), 1.0).unwrap().geometry().unwrap();
        let (v, report) = best_fit_ckf(&geo, &SpeedFunction::MeanCurvature, DEFAULT_TOLERANCE).unwrap();
        assert!((v.mu - 0.5).abs() < 1e-12);
        assert!(v.parameters().iter().enumerate().all(|(i, p)| i == 6 || p.abs() < 1e-12));
        assert_eq!(report.verdict, Verdict::Soliton);
        assert!(report.residual_sup < 1e-12);
    }

    #[test]
    fn rotation_only_gives_constant_residual() {
        let geo = generate::sphere(spec(), 3.0).unwrap().geometry().unwrap();
        let r = residual(&geo, &ConformalKillingField::rotation([0.3, -0.2, 0.5]), &SpeedFunction::MeanCurvature).unwrap();
        assert!(r.values().iter().all(|v| (v + 1.5).abs() < 1e-12));
    }

    #[test]
    fn translated_sphere_recovers_hand_field() {
        let c = Vector3::new(0.1, -0.15, 0.2);
        let geo = generate::translated_sphere(spec(), 1.0, c).unwrap().geometry().unwrap();
        let (v, _) = best_fit_ckf(&geo, &SpeedFunction::MeanCurvature, DEFAULT_TOLERANCE).unwrap();
        assert!((v.mu - 0.5).abs() < 1e-9);
        for i in 0..3 {
            assert!((v.v[i] + 0.5 * c[i]).abs() < 1e-9, "{v:?}");
            assert!(v.b[i].abs() < 1e-9 && v.s_lower[i].abs() < 1e-9);
        }
    }
}
