use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use icflow::conformal::ConformalKillingField;
use icflow::flow::{asymptotics_check, run, AsymptoticsReport, FlowConfig, FlowRecord};
use icflow::invariants::{self, default_a_values, MinkowskiResidual, QbarReport};
use icflow::io::{self, SurfaceMeta};
use icflow::soliton;
use icflow::surface::{inversion_mean_curvature_check, StarShapedHypersurface};
use icflow::{generate, io::write_atomic};

use crate::manifest::Run;
use crate::{Command, Common, GenKind};

pub enum Status {
    Passed,
    Failed(String),
}

fn load(path: &Path, common: &Common) -> Result<StarShapedHypersurface> {
    let (surface, _) = io::read_surface(path).with_context(|| format!("reading {}", path.display()))?;
    match common.grid {
        Some(spec) => Ok(generate::resample(&surface, spec)?),
        None => Ok(surface),
    }
}

fn write_report<T: Serialize>(run: &mut Run, dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    io::write_json(&path, value)?;
    run.output(path.clone());
    Ok(path)
}

pub fn dispatch(command: Command) -> Result<Status> {
    match command {
        Command::Gen { kind, grid, out } => {
            let (surface, meta) = match &kind {
                GenKind::Sphere { radius } => (
                    generate::sphere(grid, *radius)?,
                    SurfaceMeta {
                        name: "sphere".into(),
                        params: json!({ "radius": radius }),
                    },
                ),
                GenKind::Spheroid { a, c } => (
                    generate::spheroid(grid, *a, *c)?,
                    SurfaceMeta {
                        name: "spheroid".into(),
                        params: json!({ "a": a, "c": c }),
                    },
                ),
                GenKind::Harmonic { base, terms } => (
                    generate::harmonic(grid, *base, terms)?,
                    SurfaceMeta {
                        name: "harmonic".into(),
                        params: json!({ "base": base, "terms": terms }),
                    },
                ),
            };
            let mut run = Run::start("gen", &[], json!({ "kind": meta.name, "params": meta.params }));
            let path = out.join("surface.json");
            io::write_surface(&path, &surface, meta)?;
            run.output(path);
            run.finish(grid)?;
            Ok(Status::Passed)
        }

        Command::Flow {
            surface,
            speed,
            t_end,
            dt_safety,
            record_every,
            no_rescale,
            filter,
            common,
        } => {
            let initial = load(&surface, &common)?;
            let config = FlowConfig {
                speed,
                t_end,
                dt_safety,
                record_every,
                rescale: !no_rescale,
                a_values: default_a_values(initial.dim()),
                filter_strength: filter,
            };
            let mut run = Run::start("flow", &[&surface], serde_json::to_value(&config)?);
            let trace = run_flow(&initial, &config)?;
            let report = asymptotics_check(&trace);

            let csv = common.out.join("trace.csv");
            write_atomic(&csv, trace.to_csv().as_bytes())?;
            run.output(csv);
            let summary = FlowSummary {
                config: &config,
                mu: trace.mu,
                steps: trace.steps,
                records: trace.records.len(),
                beta: trace.beta,
                final_record: trace.records.last(),
                willmore_rate_mismatch: trace
                    .willmore_rate_mismatch()
                    .iter()
                    .map(|(_, fd, rate)| (fd - rate).abs() / rate.abs().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max),
                asymptotics: &report,
            };
            write_report(&mut run, &common.out, "summary.json", &summary)?;
            if let Some(last) = &trace.final_surface {
                let path = common.out.join("final_surface.json");
                let meta = SurfaceMeta {
                    name: "flow_final".into(),
                    params: json!({ "t": t_end, "speed": speed.to_string() }),
                };
                io::write_surface(&path, last, meta)?;
                run.output(path);
            }
            run.finish(initial.spec())?;
            Ok(if report.passed {
                Status::Passed
            } else {
                Status::Failed(format!(
                    "asymptotics check failed: W violations {:?}, Q violations {:?}, E_sup decreased {}",
                    report.willmore_violations, report.q_violations, report.e_sup_decreased
                ))
            })
        }

        Command::Diag { surface, common } => {
            let s = load(&surface, &common)?;
            let mut run = Run::start("diag", &[&surface], json!({}));
            let report = invariants::energy_report(&s, &default_a_values(s.dim()))?;
            write_report(&mut run, &common.out, "energy.json", &report)?;
            run.finish(s.spec())?;
            Ok(Status::Passed)
        }

        Command::Invariance {
            surface,
            seed,
            trials,
            tol,
            common,
        } => {
            let s = load(&surface, &common)?;
            let mut run = Run::start(
                "invariance",
                &[&surface],
                json!({ "seed": seed, "trials": trials, "tol": tol }),
            );
            let audit = invariance_audit(&s, seed, trials, tol)?;
            write_report(&mut run, &common.out, "audit.json", &audit)?;
            run.finish(s.spec())?;
            Ok(if audit.passed {
                Status::Passed
            } else {
                Status::Failed("invariance audit failed".into())
            })
        }

        Command::Soliton {
            surface,
            speed,
            tol,
            common,
        } => {
            let s = load(&surface, &common)?;
            let mut run = Run::start("soliton", &[&surface], json!({ "speed": speed.to_string(), "tol": tol }));
            let report = soliton::classify(&s.geometry()?, &speed, tol)?;
            write_report(&mut run, &common.out, "soliton.json", &report)?;
            run.finish(s.spec())?;
            Ok(Status::Passed)
        }

        Command::Inequality { surface, common } => {
            let s = load(&surface, &common)?;
            let mut run = Run::start("inequality", &[&surface], json!({}));
            let report = invariants::qbar(&s)?;
            write_report(&mut run, &common.out, "qbar.json", &report)?;
            run.finish(s.spec())?;
            Ok(if report.holds {
                Status::Passed
            } else {
                Status::Failed(format!("Qbar {} outside [{}, {}]", report.qbar, report.lower, report.upper))
            })
        }
    }
}

fn run_flow(initial: &StarShapedHypersurface, config: &FlowConfig) -> Result<icflow::flow::FlowTrace> {
    Ok(run(initial, config)?)
}

#[derive(Serialize)]
struct FlowSummary<'a> {
    config: &'a FlowConfig,
    mu: f64,
    steps: usize,
    records: usize,
    beta: Option<f64>,
    final_record: Option<&'a FlowRecord>,
    /// Largest relative gap between predicted and differenced `dW/dt`.
    willmore_rate_mismatch: f64,
    asymptotics: &'a AsymptoticsReport,
}

#[derive(Serialize)]
struct ETensorCheck {
    a: f64,
    sup_difference: f64,
    eigenvalue_mismatch: f64,
}

#[derive(Serialize)]
struct InvarianceAudit {
    seed: u64,
    trials: usize,
    tol: f64,
    e_tensor: Vec<ETensorCheck>,
    inversion_mean_curvature: f64,
    /// Largest relative Hsiung–Minkowski residual per `k`.
    minkowski_max: Vec<f64>,
    minkowski_worst: Option<MinkowskiResidual>,
    fields: Vec<ConformalKillingField>,
    qbar: QbarReport,
    qbar_inverted: f64,
    passed: bool,
}

fn invariance_audit(s: &StarShapedHypersurface, seed: u64, trials: usize, tol: f64) -> Result<InvarianceAudit> {
    let n = s.dim();
    let geo = s.geometry()?;
    let inv_surface = s.invert();
    let inv = inv_surface.geometry()?;
    let mut e_checks = Vec::new();
    for a in default_a_values(n) {
        let e = invariants::e_tensor(&geo, a)?;
        let ei = invariants::e_tensor(&inv, a)?;
        e_checks.push(ETensorCheck {
            a,
            sup_difference: e.tensor.sup_difference(&ei.tensor),
            eigenvalue_mismatch: e.eigenvalue_mismatch,
        });
    }
    let inversion = inversion_mean_curvature_check(s)?.sup;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<ConformalKillingField> = (0..trials).map(|_| ConformalKillingField::random(&mut rng, 1.0)).collect();
    let mut minkowski_max = vec![0.0f64; n];
    let mut worst: Option<MinkowskiResidual> = None;
    for v in &fields {
        for (k, slot) in minkowski_max.iter_mut().enumerate() {
            let r = invariants::hsiung_minkowski_residual(&geo, v, k)?;
            if worst.is_none_or(|w| r.relative > w.relative) {
                worst = Some(r);
            }
            *slot = slot.max(r.relative);
        }
    }
    let qbar = invariants::qbar_from(s, &geo, &inv)?;
    let qbar_inverted = invariants::qbar(&inv_surface)?.qbar;

    let passed = e_checks.iter().all(|c| c.sup_difference < tol && c.eigenvalue_mismatch < tol)
        && inversion < tol
        && minkowski_max.iter().all(|m| *m < tol)
        && qbar.holds
        && (qbar_inverted - qbar.qbar).abs() < tol * qbar.qbar;
    Ok(InvarianceAudit {
        seed,
        trials,
        tol,
        e_tensor: e_checks,
        inversion_mean_curvature: inversion,
        minkowski_max,
        minkowski_worst: worst,
        fields,
        qbar,
        qbar_inverted,
        passed,
    })
}
