//! Numerical laboratory for inverse curvature flows of closed star-shaped
//! hypersurfaces written as radial graphs over the unit sphere.
//!
//! The crate discretizes `S²` with a Gauss–Legendre × Fourier grid and builds
//! on it:
//!
//! * [`grid`]: quadrature and spectral covariant derivatives on the sphere;
//! * [`surface`]: the full extrinsic geometry of a radial graph `{f(p) p}`;
//! * [`conformal`]: conformal Killing fields of `R³` and their flows;
//! * [`invariants`]: Willmore energy, the conformally invariant tensors
//!   `E(a)`, Guan–Li quotients, Hsiung–Minkowski residuals, the inversion
//!   quantity `Q̄`;
//! * [`flow`]: explicit time stepping of inverse curvature flows;
//! * [`soliton`]: least-squares detection of self-conformal solutions.
//!
//! ```
//! use icflow::{generate, grid::GridSpec, invariants};
//!
//! let spec = GridSpec::new(16, 32).unwrap();
//! let sphere = generate::sphere(spec, 2.0).unwrap();
//! let w = invariants::willmore(&sphere.geometry().unwrap()).unwrap();
//! assert!((w - 16.0 * std::f64::consts::PI).abs() < 1e-10);
//! ```

pub mod conformal;
pub mod error;
pub mod flow;
pub mod generate;
pub mod grid;
pub mod invariants;
pub mod io;
pub mod ode;
pub mod soliton;
pub mod speed;
pub mod surface;
pub mod symmetric;

pub use error::{Error, Result};
