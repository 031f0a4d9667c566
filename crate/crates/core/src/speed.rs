//! Curvature functions `ρ(κ)` driving inverse curvature flows, and an audit of
//! the structural conditions a speed must satisfy: positivity, symmetry,
//! degree-one homogeneity, monotonicity and concavity on its cone.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmetric::{elementary, sigma_gradient, sigma_hessian};

/// A function of the principal curvatures defined on an open cone.
pub trait CurvatureFunction: Sync {
    fn name(&self) -> String;

    fn value(&self, kappa: &[f64]) -> f64;

    fn in_cone(&self, kappa: &[f64]) -> bool;

    fn gradient(&self, kappa: &[f64]) -> Vec<f64> {
        finite_difference_gradient(|x| self.value(x), kappa)
    }

    fn hessian(&self, kappa: &[f64]) -> Vec<Vec<f64>> {
        finite_difference_hessian(|x| self.value(x), kappa)
    }
}

/// Centred-difference gradient of `f` at `kappa`.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, kappa: &[f64]) -> Vec<f64> {
    let h = 1e-6 * (1.0 + kappa.iter().fold(0.0f64, |a, k| a.max(k.abs())));
    (0..kappa.len())
        .map(|i| {
            let mut p = kappa.to_vec();
            let mut m = kappa.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

/// Centred-difference Hessian of `f` at `kappa`.
pub fn finite_difference_hessian(f: impl Fn(&[f64]) -> f64, kappa: &[f64]) -> Vec<Vec<f64>> {
    let n = kappa.len();
    let h = 1e-4 * (1.0 + kappa.iter().fold(0.0f64, |a, k| a.max(k.abs())));
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut x = kappa.to_vec();
        x[i] += si;
        x[j] += sj;
        f(&x)
    };
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] =
                (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) + shifted(i, -h, j, -h)) / (4.0 * h * h);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedFunction {
    /// `H = σ₁`.
    MeanCurvature,
    /// `σ_k / σ_{k-1}`.
    Quotient { k: usize },
    /// `σ_k^{1/k}`.
    Power { k: usize },
    /// `(σ_i / σ_j)^{1/(i-j)}`, `i > j`.
    Ratio { i: usize, j: usize },
}

impl SpeedFunction {
    /// The pair `(i, j)` with `ρ = (σ_i/σ_j)^{1/(i-j)}`.
    pub fn orders(&self) -> (usize, usize) {
        match *self {
            SpeedFunction::MeanCurvature => (1, 0),
            SpeedFunction::Quotient { k } => (k, k - 1),
            SpeedFunction::Power { k } => (k, 0),
            SpeedFunction::Ratio { i, j } => (i, j),
        }
    }

    /// Check that the speed makes sense for `n` principal curvatures.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |k: usize| Error::OrderOutOfRange {
            k,
            range: format!("1..={n}"),
        };
        match *self {
            SpeedFunction::MeanCurvature => Ok(()),
            SpeedFunction::Quotient { k } | SpeedFunction::Power { k } if k == 0 || k > n => Err(bad(k)),
            SpeedFunction::Ratio { i, j } if i <= j => Err(Error::InvalidInput(format!(
                "ratio speed needs i > j, got i={i}, j={j}"
            ))),
            SpeedFunction::Ratio { i, .. } if i > n => Err(bad(i)),
            _ => Ok(()),
        }
    }

    /// `ρ(κ)` and `Σ_a ∂ρ/∂κ_a` from a single pass over the `σ_l`, or `None`
    /// outside the cone. Uses `Σ_a ∂σ_l/∂κ_a = (n - l + 1) σ_{l-1}`.
    pub fn value_and_slope(&self, kappa: &[f64]) -> Option<(f64, f64)> {
        let n = kappa.len();
        let (i, j) = self.orders();
        if i > n {
            return None;
        }
        let e = elementary(kappa);
        if !(1..=i).all(|l| e[l] > 0.0) {
            return None;
        }
        let trace = |l: usize| if l == 0 { 0.0 } else { (n - l + 1) as f64 * e[l - 1] };
        let p = 1.0 / (i - j) as f64;
        let (si, sj) = (e[i], e[j]);
        let q = si / sj;
        let rho = match i - j {
            1 => q,
            2 => q.sqrt(),
            _ => q.powf(p),
        };
        let dq = (trace(i) * sj - si * trace(j)) / (sj * sj);
        Some((rho, p * rho / q * dq))
    }

    /// `μ = ρ(1, …, 1)`.
    pub fn mu(&self, n: usize) -> f64 {
        self.value(&vec![1.0; n])
    }
}

impl CurvatureFunction for SpeedFunction {
    fn name(&self) -> String {
        self.to_string()
    }

    fn value(&self, kappa: &[f64]) -> f64 {
        let (i, j) = self.orders();
        let e = elementary(kappa);
        let q = e[i] / e[j];
        match i - j {
            1 => q,
            2 => q.sqrt(),
            d => q.powf(1.0 / d as f64),
        }
    }

    /// Garding cone `Γ_i`: `σ_l > 0` for `1 <= l <= i`.
    fn in_cone(&self, kappa: &[f64]) -> bool {
        let (i, _) = self.orders();
        let e = elementary(kappa);
        i <= kappa.len() && (1..=i).all(|l| e[l] > 0.0)
    }

    fn gradient(&self, kappa: &[f64]) -> Vec<f64> {
        let (i, j) = self.orders();
        let p = 1.0 / (i - j) as f64;
        let e = elementary(kappa);
        let (si, sj) = (e[i], e[j]);
        let gi = sigma_gradient(kappa, i);
        let gj = sigma_gradient(kappa, j);
        let q = si / sj;
        let scale = p * q.powf(p - 1.0);
        gi.iter()
            .zip(&gj)
            .map(|(a, b)| scale * (a * sj - si * b) / (sj * sj))
            .collect()
    }

    fn hessian(&self, kappa: &[f64]) -> Vec<Vec<f64>> {
        let n = kappa.len();
        let (i, j) = self.orders();
        let p = 1.0 / (i - j) as f64;
        let e = elementary(kappa);
        let (si, sj) = (e[i], e[j]);
        let (gi, gj) = (sigma_gradient(kappa, i), sigma_gradient(kappa, j));
        let (hi, hj) = (sigma_hessian(kappa, i), sigma_hessian(kappa, j));
        let q = si / sj;
        let dq: Vec<f64> = (0..n).map(|a| (gi[a] * sj - si * gj[a]) / (sj * sj)).collect();
        let mut out = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let d2q = (hi[a][b] * sj + gi[a] * gj[b] - gi[b] * gj[a] - si * hj[a][b]) / (sj * sj)
                    - 2.0 * (gi[a] * sj - si * gj[a]) * gj[b] / (sj * sj * sj);
                out[a][b] = p * (p - 1.0) * q.powf(p - 2.0) * dq[a] * dq[b] + p * q.powf(p - 1.0) * d2q;
            }
        }
        out
    }
}

impl fmt::Display for SpeedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpeedFunction::MeanCurvature => write!(f, "H"),
            SpeedFunction::Quotient { k } => write!(f, "quotient:{k}"),
            SpeedFunction::Power { k } => write!(f, "power:{k}"),
            SpeedFunction::Ratio { i, j } => write!(f, "ratio:{i},{j}"),
        }
    }
}

impl FromStr for SpeedFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognised speed '{s}' (expected H, quotient:k, power:k or ratio:i,j)"));
        let int = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        if s == "H" {
            return Ok(SpeedFunction::MeanCurvature);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let speed = match kind {
            "quotient" => SpeedFunction::Quotient { k: int(arg)? },
            "power" => SpeedFunction::Power { k: int(arg)? },
            "ratio" => {
                let (i, j) = arg.split_once(',').ok_or_else(bad)?;
                SpeedFunction::Ratio { i: int(i)?, j: int(j)? }
            }
            _ => return Err(bad()),
        };
        match speed {
            SpeedFunction::Quotient { k: 0 } | SpeedFunction::Power { k: 0 } => Err(bad()),
            SpeedFunction::Ratio { i, j } if i <= j => Err(bad()),
            s => Ok(s),
        }
    }
}

/// `|A| = (Σ κ_i²)^{1/2}` on the positive cone. Convex, so it is not an admissible speed.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormA;

impl CurvatureFunction for NormA {
    fn name(&self) -> String {
        "|A|".into()
    }

    fn value(&self, kappa: &[f64]) -> f64 {
        kappa.iter().map(|k| k * k).sum::<f64>().sqrt()
    }

    fn in_cone(&self, kappa: &[f64]) -> bool {
        kappa.iter().all(|k| *k > 0.0)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConditionResult {
    pub passed: bool,
    pub failures: usize,
    /// Largest violation seen, in the units of the condition.
    pub worst: f64,
}

impl ConditionResult {
    fn record(&mut self, violation: f64) {
        if violation > 0.0 {
            self.failures += 1;
            self.worst = self.worst.max(violation);
        }
    }

    fn finish(&mut self) {
        self.passed = self.failures == 0;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub speed: String,
    pub dim: usize,
    pub samples: usize,
    pub positivity: ConditionResult,
    pub symmetry: ConditionResult,
    pub homogeneity: ConditionResult,
    pub monotonicity: ConditionResult,
    pub concavity: ConditionResult,
    pub passed: bool,
}

/// Draw `samples` points of the cone and test the five structural conditions.
///
/// Monotonicity uses centred differences of `ρ`; concavity uses the largest
/// eigenvalue of the Hessian, which must not exceed `1e-8` relative to its size.
pub fn class_c_audit(speed: &dyn CurvatureFunction, n: usize, samples: usize, rng: &mut impl Rng) -> AuditReport {
    let mut positivity = ConditionResult::default();
    let mut symmetry = ConditionResult::default();
    let mut homogeneity = ConditionResult::default();
    let mut monotonicity = ConditionResult::default();
    let mut concavity = ConditionResult::default();

    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < samples && attempts < 1000 * samples.max(1) {
        attempts += 1;
        let kappa: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..4.0)).collect();
        if !speed.in_cone(&kappa) {
            continue;
        }
        drawn += 1;
        let rho = speed.value(&kappa);
        positivity.record(if rho > 0.0 && rho.is_finite() { 0.0 } else { rho.abs().max(f64::MIN_POSITIVE) });

        let mut reversed = kappa.clone();
        reversed.reverse();
        reversed.rotate_left(n / 2);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        let d = rel(speed.value(&reversed), rho);
        symmetry.record(if d <= 1e-12 { 0.0 } else { d });

        for c in [0.5, 3.0] {
            let scaled: Vec<f64> = kappa.iter().map(|k| c * k).collect();
            let d = rel(speed.value(&scaled), c * rho);
            homogeneity.record(if d <= 1e-12 { 0.0 } else { d });
        }

        let analytic = speed.gradient(&kappa);
        let scale = kappa.iter().fold(0.0f64, |a, k| a.max(k.abs()));
        for i in 0..n {
            let h = 1e-7 * scale.max(1e-3);
            let mut p = kappa.clone();
            let mut m = kappa.clone();
            p[i] += h;
            m[i] -= h;
            let slope = if speed.in_cone(&p) && speed.in_cone(&m) {
                (speed.value(&p) - speed.value(&m)) / (2.0 * h)
            } else {
                analytic[i]
            };
            monotonicity.record(if slope > 0.0 { 0.0 } else { slope.abs().max(f64::MIN_POSITIVE) });
        }

        let hess = speed.hessian(&kappa);
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (hess[i][j] + hess[j][i]));
        let size = m.amax().max(1.0);
        let top = m.symmetric_eigenvalues().max();
        concavity.record(if top <= 1e-8 * size { 0.0 } else { top });
    }

    for c in [&mut positivity, &mut symmetry, &mut homogeneity, &mut monotonicity, &mut concavity] {
        c.finish();
    }
    let passed = drawn == samples
        && positivity.passed
        && symmetry.passed
        && homogeneity.passed
        && monotonicity.passed
        && concavity.passed;
    AuditReport {
        speed: speed.name(),
        dim: n,
        samples: drawn,
        positivity,
        symmetry,
        homogeneity,
        monotonicity,
        concavity,
        passed,
    }
}
