//! Inverse curvature flows `∂_t F = ν / ρ(κ)` of radial graphs.
//!
//! For `F = f p` the normal speed `1/ρ` is realised by the scalar equation
//!
//! ```text
//! ∂_t f = √(1 + |∇ log f|²) / ρ(κ)
//! ```
//!
//! since `⟨p, ν⟩ = 1/√(1 + |∇ log f|²)`. Round spheres expand as
//! `r(t) = r₀ e^{t/μ}`, `μ = ρ(1, …, 1)`. With rescaling on, the unknown is
//! `ũ = e^{-t/μ} f`, which obeys `∂_t ũ = √(1 + |∇ log ũ|²)/ρ(κ̃) - ũ/μ` and is
//! stationary on spheres.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::invariants::{e_tensor, guan_li_q, willmore, willmore_rate};
use crate::io::format_float;
use crate::speed::{CurvatureFunction, SpeedFunction};
use crate::surface::{graph_curvatures, GeometryBundle, StarShapedHypersurface, RADIUS_FLOOR};

/// Default strength of the exponential filter applied after each step.
pub const DEFAULT_FILTER_STRENGTH: f64 = 10.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowConfig {
    pub speed: SpeedFunction,
    pub t_end: f64,
    /// Fraction of the parabolic step limit, in `(0, 0.5]`.
    pub dt_safety: f64,
    /// Record diagnostics every this many steps (the final state is always recorded).
    pub record_every: usize,
    pub rescale: bool,
    pub a_values: Vec<f64>,
    /// Exponential filter strength on the top tenth of degrees; `0` disables it.
    pub filter_strength: f64,
}

impl FlowConfig {
    pub fn new(speed: SpeedFunction, t_end: f64) -> Self {
        FlowConfig {
            speed,
            t_end,
            dt_safety: 0.2,
            record_every: 10,
            rescale: true,
            a_values: crate::invariants::default_a_values(2),
            filter_strength: DEFAULT_FILTER_STRENGTH,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.speed.validate(n)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 0.5) {
            return Err(Error::InvalidInput(format!("dt_safety must lie in (0, 0.5], got {}", self.dt_safety)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput("record_every must be at least 1".into()));
        }
        if !(self.filter_strength >= 0.0) {
            return Err(Error::InvalidInput("filter strength must be non-negative".into()));
        }
        Ok(())
    }
}

fn cone_error(speed: &SpeedFunction, node: usize, kappa: &[f64]) -> Error {
    Error::CurvatureCone {
        node,
        kappa: kappa.to_vec(),
        speed: speed.to_string(),
    }
}

/// `1/ρ(κ)` at every node.
pub fn normal_speed(geo: &GeometryBundle, speed: &SpeedFunction) -> Result<ScalarField> {
    speed.validate(geo.dim())?;
    let values = geo
        .principal
        .iter()
        .enumerate()
        .map(|(k, kappa)| {
            if !speed.in_cone(kappa) {
                return Err(cone_error(speed, k, kappa));
            }
            Ok(1.0 / speed.value(kappa))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(geo.field(values))
}

/// `∂_t f` and the largest parabolic coefficient `(1/ρ²) Σ ∂ρ/∂κ_i / f²`.
fn graph_rate(values: &[f64], template: &StarShapedHypersurface, speed: &SpeedFunction, drift: Option<f64>) -> Result<(Vec<f64>, f64)> {
    if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > RADIUS_FLOOR)) {
        return Err(Error::DegenerateSurface {
            node,
            value,
            floor: RADIUS_FLOOR,
        });
    }
    let nodes = graph_curvatures(template.grid(), values)?;
    let mut diffusivity: f64 = 0.0;
    let rate = nodes
        .iter()
        .enumerate()
        .map(|(k, (grad_sq, kappa))| {
            let (rho, slope) = speed.value_and_slope(kappa).ok_or_else(|| cone_error(speed, k, kappa))?;
            diffusivity = diffusivity.max(slope / (rho * rho * values[k] * values[k]));
            let w = (1.0 + grad_sq).sqrt();
            Ok(w / rho - drift.map_or(0.0, |mu| values[k] / mu))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rate, diffusivity))
}

fn rk4(values: &[f64], dt: f64, k1: &[f64], rate: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    let k2 = rate(&axpy(values, 0.5 * dt, k1))?;
    let k3 = rate(&axpy(values, 0.5 * dt, &k2))?;
    let k4 = rate(&axpy(values, dt, &k3))?;
    Ok((0..values.len())
        .map(|i| values[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// One classical Runge–Kutta step of the unrescaled flow, without filtering.
pub fn step(surface: &StarShapedHypersurface, speed: &SpeedFunction, dt: f64) -> Result<StarShapedHypersurface> {
    speed.validate(surface.dim())?;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let f = surface.radius().values();
    let (k1, _) = graph_rate(f, surface, speed, None)?;
    let next = rk4(f, dt, &k1, |v| graph_rate(v, surface, speed, None).map(|r| r.0))?;
    StarShapedHypersurface::from_values(surface.grid().clone(), next)
}

/// Diagnostics at one recorded time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    #[serde(rename = "W")]
    pub willmore: f64,
    /// `dW/dt` predicted from the first-variation formula.
    pub willmore_rate: f64,
    /// `Q_1, …, Q_{n-1}`.
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    /// `sup |E(a)|` in the order of the configured `a` values.
    #[serde(rename = "E_sup")]
    pub e_sup: Vec<f64>,
    /// `max f / min f`.
    pub osc: f64,
    /// Mean of `ũ = e^{-t/μ} f` over the unit sphere.
    pub ubar_mean: f64,
    /// `max ũ - min ũ`.
    pub ubar_osc: f64,
    /// `max |ũ κ̃_i - 1| = max |f κ_i - 1|`.
    pub shape_dev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrace {
    pub config: FlowConfig,
    pub mu: f64,
    pub steps: usize,
    pub records: Vec<FlowRecord>,
    /// Decay rate of `shape_dev`, fitted on the trailing half of the records.
    pub beta: Option<f64>,
    #[serde(skip)]
    pub final_surface: Option<StarShapedHypersurface>,
}

fn record(surface: &StarShapedHypersurface, t: f64, mu: f64, config: &FlowConfig) -> Result<FlowRecord> {
    let geo = surface.geometry()?;
    let n = surface.dim();
    let speed = normal_speed(&geo, &config.speed)?;
    let scale = (-t / mu).exp();
    let f = surface.radius();
    let ubar_mean = f.integrate() / (4.0 * PI) * scale;
    let shape_dev = (0..geo.len())
        .map(|k| {
            let fk = geo.radius[k];
            geo.principal[k].iter().fold(0.0f64, |acc, kap| acc.max((fk * kap - 1.0).abs()))
        })
        .fold(0.0, f64::max);
    Ok(FlowRecord {
        t,
        willmore: willmore(&geo)?,
        willmore_rate: willmore_rate(&geo, &speed)?,
        q: (1..n).map(|k| guan_li_q(&geo, k)).collect::<Result<_>>()?,
        e_sup: config
            .a_values
            .iter()
            .map(|a| e_tensor(&geo, *a).map(|e| e.sup_norm))
            .collect::<Result<_>>()?,
        osc: surface.oscillation(),
        ubar_mean,
        ubar_osc: (f.max() - f.min()) * scale,
        shape_dev,
    })
}

/// Evolve `initial` to `config.t_end`.
///
/// The step is `dt = dt_safety · h² / D` with `h = π / n_theta` and `D` the
/// largest parabolic coefficient of the current state, recomputed every step.
pub fn run(initial: &StarShapedHypersurface, config: &FlowConfig) -> Result<FlowTrace> {
    let n = initial.dim();
    config.validate(n)?;
    let speed = config.speed;
    let mu = speed.mu(n);
    let grid = initial.grid().clone();
    let h = PI / grid.spec().n_theta as f64;
    let drift = config.rescale.then_some(mu);

    // State is f, or ũ when rescaling.
    let mut state = initial.radius().values().to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    let mut records = vec![record(initial, 0.0, mu, config)?];
    let mut current = initial.clone();

    while t < config.t_end {
        let (k1, diffusivity) = graph_rate(&state, initial, &speed, drift)?;
        let mut dt = config.dt_safety * h * h / diffusivity.max(f64::MIN_POSITIVE);
        let last = t + dt >= config.t_end * (1.0 - 1e-12);
        if last {
            dt = config.t_end - t;
        }
        let mut next = rk4(&state, dt, &k1, |v| graph_rate(v, initial, &speed, drift).map(|r| r.0))?;
        if config.filter_strength > 0.0 {
            next = grid.filter(&next, config.filter_strength);
        }
        if let Some(node) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        let t_next = if last { config.t_end } else { t + dt };
        if !(t_next > t) {
            return Err(Error::InvalidInput(format!("time failed to advance past t = {t}")));
        }
        t = t_next;
        state = next;
        steps += 1;

        let radius: Vec<f64> = match drift {
            Some(mu) => {
                let s = (t / mu).exp();
                state.iter().map(|v| v * s).collect()
            }
            None => state.clone(),
        };
        current = StarShapedHypersurface::from_values(grid.clone(), radius)?;
        if steps % config.record_every == 0 || last {
            records.push(record(&current, t, mu, config)?);
        }
    }

    let beta = fit_decay(records.iter().map(|r| (r.t, r.shape_dev)));
    Ok(FlowTrace {
        config: config.clone(),
        mu,
        steps,
        records,
        beta,
        final_surface: Some(current),
    })
}

/// Least-squares rate `β` in `y ≈ C e^{-β t}` over the trailing half of the samples.
pub fn fit_decay(samples: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let all: Vec<(f64, f64)> = samples.collect();
    let tail: Vec<(f64, f64)> = all[all.len() / 2..]
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    if tail.len() < 3 {
        return None;
    }
    let m = tail.len() as f64;
    let (st, sy) = tail.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (num, den) = tail
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    (den > 0.0).then(|| -num / den)
}

impl FlowTrace {
    pub fn csv_header(&self) -> String {
        let n_q = self.records.first().map_or(0, |r| r.q.len());
        let mut cols = vec!["t".to_string(), "W".to_string()];
        cols.extend((1..=n_q).map(|k| format!("Q{k}")));
        cols.extend(self.config.a_values.iter().map(|a| format!("E_sup_{a}")));
        cols.extend(["osc", "ubar_mean", "ubar_osc", "shape_dev"].map(String::from));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.records {
            let mut row = vec![format_float(r.t), format_float(r.willmore)];
            row.extend(r.q.iter().map(|v| format_float(*v)));
            row.extend(r.e_sup.iter().map(|v| format_float(*v)));
            row.extend([r.osc, r.ubar_mean, r.ubar_osc, r.shape_dev].map(format_float));
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// `(t, finite-difference dW/dt, predicted dW/dt)` at every interior record.
    pub fn willmore_rate_mismatch(&self) -> Vec<(f64, f64, f64)> {
        self.records
            .windows(3)
            .map(|w| {
                // Three-point derivative on a possibly uneven stencil.
                let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
                let fd = (-h2 / (h1 * (h1 + h2))) * w[0].willmore
                    + ((h2 - h1) / (h1 * h2)) * w[1].willmore
                    + (h1 / (h2 * (h1 + h2))) * w[2].willmore;
                (w[1].t, fd, w[1].willmore_rate)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    /// `None` when monotonicity of `W` is not expected for the speed.
    pub willmore_monotone: Option<bool>,
    pub willmore_violations: Vec<usize>,
    /// `None` unless the speed is `σ_k/σ_{k-1}` with a defined `Q_k`.
    pub q_monotone: Option<bool>,
    pub q_violations: Vec<usize>,
    pub e_sup_initial: Vec<f64>,
    pub e_sup_final: Vec<f64>,
    /// Whether `E_sup` shrank, for starts that are not already umbilic.
    pub e_sup_decreased: bool,
    /// Fitted exponential decay rate of each `E_sup` series.
    pub e_sup_rates: Vec<Option<f64>>,
    pub beta: Option<f64>,
    pub osc_final: f64,
    pub passed: bool,
}

/// Relative slack per record for monotonicity checks.
pub const MONOTONE_TOLERANCE: f64 = 1e-8;

fn nonincreasing(series: &[f64]) -> Vec<usize> {
    series
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + MONOTONE_TOLERANCE * w[0].abs())
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn asymptotics_check(trace: &FlowTrace) -> AsymptoticsReport {
    let records = &trace.records;
    let speed = trace.config.speed;

    let (willmore_monotone, willmore_violations) = if speed.orders() == (1, 0) {
        let v = nonincreasing(&records.iter().map(|r| r.willmore).collect::<Vec<_>>());
        (Some(v.is_empty()), v)
    } else {
        (None, Vec::new())
    };

    let (i, j) = speed.orders();
    let n_q = records.first().map_or(0, |r| r.q.len());
    let (q_monotone, q_violations) = if i == j + 1 && i >= 1 && i <= n_q {
        let v = nonincreasing(&records.iter().map(|r| r.q[i - 1]).collect::<Vec<_>>());
        (Some(v.is_empty()), v)
    } else {
        (None, Vec::new())
    };

    let first = records.first().map(|r| r.e_sup.clone()).unwrap_or_default();
    let last = records.last().map(|r| r.e_sup.clone()).unwrap_or_default();
    let e_sup_decreased = first.iter().zip(&last).all(|(a, b)| *a <= 1e-10 || b < a);
    let e_sup_rates = (0..first.len())
        .map(|a| fit_decay(records.iter().map(|r| (r.t, r.e_sup[a]))))
        .collect();

    let passed = willmore_monotone.unwrap_or(true) && q_monotone.unwrap_or(true) && e_sup_decreased;
    AsymptoticsReport {
        willmore_monotone,
        willmore_violations,
        q_monotone,
        q_violations,
        e_sup_initial: first,
        e_sup_final: last,
        e_sup_decreased,
        e_sup_rates,
        beta: trace.beta,
        osc_final: records.last().map_or(1.0, |r| r.osc),
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::grid::GridSpec;

    fn spec() -> GridSpec {
        GridSpec::new(16, 32).unwrap()
    }

    #[test]
    fn sphere_speed_is_radius_over_n() {
        let geo = generate::sphere(spec(), 1.5).unwrap().geometry().unwrap();
        let s = normal_speed(&geo, &SpeedFunction::MeanCurvature).unwrap();
        assert!(s.values().iter().all(|v| (v - 0.75).abs() < 1e-13));
        let s = normal_speed(&geo, &SpeedFunction::Power { k: 2 }).unwrap();
        assert!(s.values().iter().all(|v| (v - 1.5).abs() < 1e-13));
    }

    #[test]
    fn one_step_matches_exponential_growth() {
        let s = generate::sphere(spec(), 1.0).unwrap();
        let next = step(&s, &SpeedFunction::MeanCurvature, 0.01).unwrap();
        let exact = (0.005f64).exp();
        assert!(next.radius().values().iter().all(|v| (v - exact).abs() < 1e-10));
    }

    #[test]
    fn decay_fit_recovers_rate() {
        let samples = (0..20).map(|i| {
            let t = i as f64 * 0.1;
            (t, 3.0 * (-1.7 * t).exp())
        });
        assert!((fit_decay(samples).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = FlowConfig::new(SpeedFunction::MeanCurvature, 1.0);
        assert!(c.validate(2).is_ok());
        c.dt_safety = 0.7;
        assert!(c.validate(2).is_err());
        c.dt_safety = 0.2;
        c.t_end = 0.0;
        assert!(c.validate(2).is_err());
    }
}
