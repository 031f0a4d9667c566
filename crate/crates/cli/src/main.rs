//! `icflow`: surface generation, flows, diagnostics and audits from the command line.
//!
//! Exit status is 0 on success, 2 when an audit or assertion fails and 3 on
//! bad input, in which case a JSON error object is written to stderr.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use icflow::grid::GridSpec;
use icflow::speed::SpeedFunction;

#[derive(Debug, Parser)]
#[command(name = "icflow", version, about = "Inverse curvature flows of star-shaped surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Resample the input onto this grid (NTHETAxNPHI).
    #[arg(long)]
    grid: Option<GridSpec>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a test surface.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, default_value = "64x128", global = true)]
        grid: GridSpec,
        #[arg(long, default_value = ".", global = true)]
        out: PathBuf,
    },
    /// Run an inverse curvature flow and write its trace.
    Flow {
        surface: PathBuf,
        #[arg(long, default_value = "H")]
        speed: SpeedFunction,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.2)]
        dt_safety: f64,
        /// Steps between recorded diagnostics.
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        /// Evolve `f` itself instead of the rescaled graph.
        #[arg(long)]
        no_rescale: bool,
        /// Spectral filter strength; 0 disables it.
        #[arg(long, default_value_t = icflow::flow::DEFAULT_FILTER_STRENGTH)]
        filter: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Energies of a surface.
    Diag {
        surface: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check conformal invariances and integral identities with random fields.
    Invariance {
        surface: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Largest admissible identity residual.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a conformal Killing field to the normal speed.
    Soliton {
        surface: PathBuf,
        #[arg(long, default_value = "H")]
        speed: SpeedFunction,
        #[arg(long, default_value_t = icflow::soliton::DEFAULT_TOLERANCE)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Two-sided bound on Q₁(Σ) + Q₁(Σ̃).
    Inequality {
        surface: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand, Clone)]
enum GenKind {
    /// Round sphere of radius R about the origin.
    Sphere { radius: f64 },
    /// Spheroid with equatorial semi-axis a and polar semi-axis c.
    Spheroid { a: f64, c: f64 },
    /// base + Σ amp·Y_lm; each term is given as l,m,amp or (l,m,amp).
    Harmonic {
        base: f64,
        #[arg(value_parser = parse_term, allow_hyphen_values = true)]
        terms: Vec<(usize, i64, f64)>,
    },
}

fn parse_term(s: &str) -> Result<(usize, i64, f64), String> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let [l, m, amp] = parts.as_slice() else {
        return Err(format!("expected l,m,amp, got {s:?}"));
    };
    Ok((
        l.parse().map_err(|e| format!("bad degree {l:?}: {e}"))?,
        m.parse().map_err(|e| format!("bad order {m:?}: {e}"))?,
        amp.parse().map_err(|e| format!("bad amplitude {amp:?}: {e}"))?,
    ))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            let _ = err.print();
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprintln!("{}", serde_json::json!({ "error": { "kind": "usage", "message": err.to_string() } }));
            return ExitCode::from(3);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(commands::Status::Passed) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed(reason)) => {
            eprintln!("{}", serde_json::json!({ "audit_failed": reason }));
            ExitCode::from(2)
        }
        Err(err) => {
            let kind = err.downcast_ref::<icflow::Error>().map_or("input", |e| e.kind());
            eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": format!("{err:#}") } }));
            ExitCode::from(3)
        }
    }
}
