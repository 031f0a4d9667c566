//! Tensor-product grid on the unit sphere S².
//!
//! Colatitudes are Gauss–Legendre nodes in `cos θ`, longitudes are uniform on
//! `[0, 2π)`. No node sits on a pole, so the chart factors `1/sin θ` and
//! `cot θ` stay finite. Derivatives are taken spectrally: a field is projected
//! onto real spherical harmonics of degree `l <= lmax` (the projection is exact
//! for band-limited fields thanks to Gauss quadrature) and the derivatives of
//! the harmonic expansion are synthesized back on the nodes.
//!
//! All tensors are stored as coordinate components in the single `(θ, φ)`
//! chart with round metric `σ = dθ² + sin²θ dφ²`.

mod legendre;

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::Vector3;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub(crate) use legendre::{legendre_with_derivative, tri, tri_len};

/// Node counts of a sphere grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridSpec {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        let spec = GridSpec { n_theta, n_phi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason| {
            Err(Error::InvalidGrid {
                n_theta: self.n_theta,
                n_phi: self.n_phi,
                reason,
            })
        };
        if self.n_theta < 8 {
            return fail("n_theta must be at least 8");
        }
        if self.n_phi < 16 {
            return fail("n_phi must be at least 16");
        }
        if self.n_phi % 2 != 0 {
            return fail("n_phi must be even");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The grid with both node counts doubled.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            n_theta: 2 * self.n_theta,
            n_phi: 2 * self.n_phi,
        }
    }

    /// Largest harmonic degree the grid resolves.
    pub fn lmax(&self) -> usize {
        (self.n_theta - 1).min(self.n_phi / 2 - 1)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_theta, self.n_phi)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("grid must look like NTHETAxNPHI, got {s:?}"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let n_theta = a.trim().parse().map_err(|_| bad())?;
        let n_phi = b.trim().parse().map_err(|_| bad())?;
        GridSpec::new(n_theta, n_phi)
    }
}

/// A symmetric 2×2 tensor in `(θ, φ)` coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub tt: f64,
    pub tp: f64,
    pub pp: f64,
}

impl Sym2 {
    pub const fn new(tt: f64, tp: f64, pp: f64) -> Self {
        Sym2 { tt, tp, pp }
    }

    pub fn det(&self) -> f64 {
        self.tt * self.pp - self.tp * self.tp
    }

    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2::new(self.pp / d, -self.tp / d, self.tt / d)
    }

    pub fn scale(&self, c: f64) -> Sym2 {
        Sym2::new(c * self.tt, c * self.tp, c * self.pp)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.tt + o.tt, self.tp + o.tp, self.pp + o.pp)
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.tt - o.tt, self.tp - o.tp, self.pp - o.pp)
    }

    pub fn max_abs(&self) -> f64 {
        self.tt.abs().max(self.tp.abs()).max(self.pp.abs())
    }

    /// `self · other` as a plain 2×2 matrix (row-major).
    pub fn matmul(&self, o: &Sym2) -> [[f64; 2]; 2] {
        [
            [self.tt * o.tt + self.tp * o.tp, self.tt * o.tp + self.tp * o.pp],
            [self.tp * o.tt + self.pp * o.tp, self.tp * o.tp + self.pp * o.pp],
        ]
    }

    /// Full contraction `A^{ij} B_ij` of a contravariant with a covariant tensor.
    pub fn contract(&self, o: &Sym2) -> f64 {
        self.tt * o.tt + 2.0 * self.tp * o.tp + self.pp * o.pp
    }
}

/// Quadrature grid with cached spherical-harmonic transform tables.
pub struct Grid {
    spec: GridSpec,
    lmax: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    phi: Vec<f64>,
    phi_sin_cos: Vec<(f64, f64)>,
    ring_weights: Vec<f64>,
    weights: Vec<f64>,
    // Per order m a block of (lmax - m + 1) rows of n_theta values.
    block_offset: Vec<usize>,
    p_table: Vec<f64>,
    dp_table: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("spec", &self.spec)
            .field("lmax", &self.lmax)
            .finish()
    }
}

/// Spherical-harmonic coefficients of a field, `f = Σ P̄_l^m(cos θ)(a_lm cos mφ + b_lm sin mφ)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    lmax: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

/// Chart derivatives of a scalar field, all synthesized from one harmonic expansion.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_theta_theta: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi_phi: Vec<f64>,
    pub laplacian: Vec<f64>,
}

struct RingCoefficients {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let GridSpec { n_theta, n_phi } = spec;
        let lmax = spec.lmax();

        let rule = GaussLegendre::new(NonZeroUsize::new(n_theta).expect("n_theta >= 8"));
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        // θ ascending means cos θ descending.
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let cos_theta: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ring_weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let theta: Vec<f64> = cos_theta.iter().map(|x| x.acos()).collect();
        let sin_theta: Vec<f64> = cos_theta.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let phi_sin_cos: Vec<(f64, f64)> = phi.iter().map(|p| p.sin_cos()).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let weights = (0..spec.len())
            .map(|k| ring_weights[k / n_phi] * dphi)
            .collect();

        let mut block_offset = Vec::with_capacity(lmax + 1);
        let mut total = 0;
        for m in 0..=lmax {
            block_offset.push(total);
            total += (lmax - m + 1) * n_theta;
        }
        let mut p_table = vec![0.0; total];
        let mut dp_table = vec![0.0; total];
        let mut p = vec![0.0; tri_len(lmax)];
        let mut dp = vec![0.0; tri_len(lmax)];
        for i in 0..n_theta {
            legendre_with_derivative(lmax, cos_theta[i], sin_theta[i], &mut p, &mut dp);
            for m in 0..=lmax {
                for l in m..=lmax {
                    let idx = block_offset[m] + (l - m) * n_theta + i;
                    p_table[idx] = p[tri(l, m)];
                    dp_table[idx] = dp[tri(l, m)];
                }
            }
        }

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_phi);
        let fft_inverse = planner.plan_fft_inverse(n_phi);

        Ok(Arc::new(Grid {
            spec,
            lmax,
            theta,
            cos_theta,
            sin_theta,
            phi,
            phi_sin_cos,
            ring_weights,
            weights,
            block_offset,
            p_table,
            dp_table,
            fft_forward,
            fft_inverse,
        }))
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn phis(&self) -> &[f64] {
        &self.phi
    }

    /// Gauss–Legendre weights of the colatitude rings (they sum to 2).
    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    /// Quadrature weight of every node; sums to 4π.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn ring(&self, node: usize) -> usize {
        node / self.spec.n_phi
    }

    #[inline]
    pub fn theta(&self, node: usize) -> f64 {
        self.theta[self.ring(node)]
    }

    #[inline]
    pub fn phi(&self, node: usize) -> f64 {
        self.phi[node % self.spec.n_phi]
    }

    #[inline]
    pub fn sin_theta(&self, node: usize) -> f64 {
        self.sin_theta[self.ring(node)]
    }

    #[inline]
    pub fn cos_theta(&self, node: usize) -> f64 {
        self.cos_theta[self.ring(node)]
    }

    /// Unit vector `p ∈ S²` of a node.
    pub fn direction(&self, node: usize) -> Vector3<f64> {
        let (s, c) = (self.sin_theta(node), self.cos_theta(node));
        let (sp, cp) = self.phi_sin_cos[node % self.spec.n_phi];
        Vector3::new(s * cp, s * sp, c)
    }

    /// `∂p/∂θ`, a unit vector.
    pub fn e_theta(&self, node: usize) -> Vector3<f64> {
        let (s, c) = (self.sin_theta(node), self.cos_theta(node));
        let (sp, cp) = self.phi_sin_cos[node % self.spec.n_phi];
        Vector3::new(c * cp, c * sp, -s)
    }

    /// `∂p/∂φ / sin θ`, a unit vector.
    pub fn e_phi(&self, node: usize) -> Vector3<f64> {
        let (sp, cp) = self.phi_sin_cos[node % self.spec.n_phi];
        Vector3::new(-sp, cp, 0.0)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    fn ring_fourier(&self, values: &[f64]) -> RingCoefficients {
        let GridSpec { n_theta, n_phi } = self.spec;
        let nm = self.lmax + 1;
        let mut cos = vec![0.0; n_theta * nm];
        let mut sin = vec![0.0; n_theta * nm];
        let mut buf = vec![Complex::new(0.0, 0.0); n_phi];
        let norm = 1.0 / n_phi as f64;
        for i in 0..n_theta {
            for (b, v) in buf.iter_mut().zip(&values[i * n_phi..(i + 1) * n_phi]) {
                *b = Complex::new(*v, 0.0);
            }
            self.fft_forward.process(&mut buf);
            cos[i * nm] = buf[0].re * norm;
            for m in 1..nm {
                cos[i * nm + m] = 2.0 * buf[m].re * norm;
                sin[i * nm + m] = -2.0 * buf[m].im * norm;
            }
        }
        RingCoefficients { cos, sin }
    }

    /// Project grid values onto spherical harmonics of degree `<= lmax`.
    pub fn analyze(&self, values: &[f64]) -> Spectrum {
        assert_eq!(values.len(), self.len());
        let n_theta = self.spec.n_theta;
        let nm = self.lmax + 1;
        let rings = self.ring_fourier(values);
        let mut cos = vec![0.0; tri_len(self.lmax)];
        let mut sin = vec![0.0; tri_len(self.lmax)];
        let mut wa = vec![0.0; n_theta];
        let mut wb = vec![0.0; n_theta];
        for m in 0..=self.lmax {
            for i in 0..n_theta {
                let w = 2.0 * PI * self.ring_weights[i];
                wa[i] = w * rings.cos[i * nm + m];
                wb[i] = w * rings.sin[i * nm + m];
            }
            for l in m..=self.lmax {
                let row = &self.p_table[self.row(l, m)..self.row(l, m) + n_theta];
                let (mut a, mut b) = (0.0, 0.0);
                for i in 0..n_theta {
                    a += wa[i] * row[i];
                    b += wb[i] * row[i];
                }
                cos[tri(l, m)] = a;
                sin[tri(l, m)] = b;
            }
        }
        Spectrum {
            lmax: self.lmax,
            cos,
            sin,
        }
    }

    #[inline]
    fn row(&self, l: usize, m: usize) -> usize {
        self.block_offset[m] + (l - m) * self.spec.n_theta
    }

    fn synthesize_rings(&self, spec: &Spectrum, derivative: bool, weight: impl Fn(usize) -> f64) -> RingCoefficients {
        let n_theta = self.spec.n_theta;
        let nm = self.lmax + 1;
        let table = if derivative { &self.dp_table } else { &self.p_table };
        let mut cos = vec![0.0; n_theta * nm];
        let mut sin = vec![0.0; n_theta * nm];
        let mut acc_a = vec![0.0; n_theta];
        let mut acc_b = vec![0.0; n_theta];
        for m in 0..=self.lmax {
            acc_a.iter_mut().for_each(|x| *x = 0.0);
            acc_b.iter_mut().for_each(|x| *x = 0.0);
            for l in m..=self.lmax {
                let w = weight(l);
                let a = w * spec.cos[tri(l, m)];
                let b = w * spec.sin[tri(l, m)];
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                let row = &table[self.row(l, m)..self.row(l, m) + n_theta];
                for i in 0..n_theta {
                    acc_a[i] += a * row[i];
                    acc_b[i] += b * row[i];
                }
            }
            for i in 0..n_theta {
                cos[i * nm + m] = acc_a[i];
                sin[i * nm + m] = acc_b[i];
            }
        }
        RingCoefficients { cos, sin }
    }

    /// Ring Fourier coefficients to node values, differentiated `phi_order` times in φ.
    fn rings_to_grid(&self, rings: &RingCoefficients, phi_order: u8) -> Vec<f64> {
        let GridSpec { n_theta, n_phi } = self.spec;
        let nm = self.lmax + 1;
        let mut out = vec![0.0; self.len()];
        let mut buf = vec![Complex::new(0.0, 0.0); n_phi];
        for i in 0..n_theta {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for m in 0..nm {
                let (a, b) = (rings.cos[i * nm + m], rings.sin[i * nm + m]);
                let mf = m as f64;
                let (a, b) = match phi_order {
                    0 => (a, b),
                    1 => (mf * b, -mf * a),
                    2 => (-mf * mf * a, -mf * mf * b),
                    _ => unreachable!("phi derivatives above second order are not used"),
                };
                if m == 0 {
                    buf[0] = Complex::new(a, 0.0);
                } else {
                    let z = Complex::new(0.5 * a, -0.5 * b);
                    buf[m] = z;
                    buf[n_phi - m] = z.conj();
                }
            }
            self.fft_inverse.process(&mut buf);
            for (o, z) in out[i * n_phi..(i + 1) * n_phi].iter_mut().zip(&buf) {
                *o = z.re;
            }
        }
        out
    }

    /// Node values of a harmonic expansion.
    pub fn synthesize(&self, spec: &Spectrum) -> Vec<f64> {
        let rings = self.synthesize_rings(spec, false, |_| 1.0);
        self.rings_to_grid(&rings, 0)
    }

    /// Harmonic projection of node values (a no-op, up to round-off, for band-limited fields).
    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        self.synthesize(&self.analyze(values))
    }

    /// Exponential low-pass filter acting on the top tenth of the degrees.
    ///
    /// Degree `l > l_c = ⌊0.9 lmax⌋` is damped by `exp(-strength ((l - l_c)/(lmax - l_c))^8)`.
    pub fn filter(&self, values: &[f64], strength: f64) -> Vec<f64> {
        let mut spec = self.analyze(values);
        let lc = (0.9 * self.lmax as f64).floor() as usize;
        let span = (self.lmax - lc).max(1) as f64;
        for l in (lc + 1)..=self.lmax {
            let damp = (-strength * ((l - lc) as f64 / span).powi(8)).exp();
            for m in 0..=l {
                spec.cos[tri(l, m)] *= damp;
                spec.sin[tri(l, m)] *= damp;
            }
        }
        self.synthesize(&spec)
    }

    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let spec = self.analyze(values);
        let rings = self.synthesize_rings(&spec, false, |l| -((l * (l + 1)) as f64));
        self.rings_to_grid(&rings, 0)
    }

    pub fn derivatives(&self, values: &[f64]) -> Derivatives {
        let spec = self.analyze(values);
        let n_theta = self.spec.n_theta;
        let nm = self.lmax + 1;
        let p = self.synthesize_rings(&spec, false, |_| 1.0);
        let dp = self.synthesize_rings(&spec, true, |_| 1.0);
        let lp = self.synthesize_rings(&spec, false, |l| (l * (l + 1)) as f64);

        // Legendre equation: P'' = -cot θ P' - (l(l+1) - m²/sin²θ) P.
        let mut d2 = RingCoefficients {
            cos: vec![0.0; n_theta * nm],
            sin: vec![0.0; n_theta * nm],
        };
        for i in 0..n_theta {
            let s = self.sin_theta[i];
            let cot = self.cos_theta[i] / s;
            let inv_s2 = 1.0 / (s * s);
            for m in 0..nm {
                let k = i * nm + m;
                let m2 = (m * m) as f64 * inv_s2;
                d2.cos[k] = -cot * dp.cos[k] - lp.cos[k] + m2 * p.cos[k];
                d2.sin[k] = -cot * dp.sin[k] - lp.sin[k] + m2 * p.sin[k];
            }
        }
        let neg_lp = RingCoefficients {
            cos: lp.cos.iter().map(|x| -x).collect(),
            sin: lp.sin.iter().map(|x| -x).collect(),
        };

        Derivatives {
            value: self.rings_to_grid(&p, 0),
            d_theta: self.rings_to_grid(&dp, 0),
            d_phi: self.rings_to_grid(&p, 1),
            d_theta_theta: self.rings_to_grid(&d2, 0),
            d_theta_phi: self.rings_to_grid(&dp, 1),
            d_phi_phi: self.rings_to_grid(&p, 2),
            laplacian: self.rings_to_grid(&neg_lp, 0),
        }
    }
}

impl Spectrum {
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Coefficients `(a_lm, b_lm)` of `P̄_l^m cos mφ` and `P̄_l^m sin mφ`.
    pub fn coefficient(&self, l: usize, m: usize) -> (f64, f64) {
        (self.cos[tri(l, m)], self.sin[tri(l, m)])
    }

    /// Power in degree `l`: `Σ_m ∫(component)² dμ`.
    pub fn degree_power(&self, l: usize) -> f64 {
        (0..=l)
            .map(|m| {
                let (a, b) = self.coefficient(l, m);
                if m == 0 {
                    a * a
                } else {
                    0.5 * (a * a + b * b)
                }
            })
            .sum()
    }

    /// Evaluate the expansion at an arbitrary point of the sphere.
    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        let n = tri_len(self.lmax);
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n];
        self.evaluate_with(theta, phi, &mut p, &mut dp)
    }

    /// As [`Spectrum::evaluate`] with caller-provided scratch of length `tri_len(lmax)`.
    pub(crate) fn evaluate_with(&self, theta: f64, phi: f64, p: &mut [f64], dp: &mut [f64]) -> f64 {
        let (s, c) = theta.sin_cos();
        legendre_with_derivative(self.lmax, c, s.abs(), p, dp);
        let mut total = 0.0;
        for m in 0..=self.lmax {
            let (sm, cm) = (m as f64 * phi).sin_cos();
            let (mut a, mut b) = (0.0, 0.0);
            for l in m..=self.lmax {
                a += self.cos[tri(l, m)] * p[tri(l, m)];
                b += self.sin[tri(l, m)] * p[tri(l, m)];
            }
            total += a * cm + b * sm;
        }
        total
    }
}

/// Real-valued field sampled on a grid (row-major, colatitude rings outermost).
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        ScalarField { grid, values }
    }

    /// Sample `f(θ, φ)` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.theta(k), grid.phi(k))).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn spec(&self) -> GridSpec {
        self.grid.spec()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), self.grid.len());
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        self.with_values(self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn ensure_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.spec() != other.spec() {
            return Err(Error::GridMismatch {
                left: self.spec().to_string(),
                right: other.spec().to_string(),
            });
        }
        Ok(())
    }

    /// Pointwise combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        self.ensure_same_grid(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `∫_{S²} f dμ_{S²}`.
    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn spectrum(&self) -> Spectrum {
        self.grid.analyze(&self.values)
    }

    pub fn derivatives(&self) -> Derivatives {
        self.grid.derivatives(&self.values)
    }

    /// Covector components `(∂_θ f, ∂_φ f)` per node.
    pub fn gradient(&self) -> Vec<[f64; 2]> {
        let d = self.derivatives();
        d.d_theta.iter().zip(&d.d_phi).map(|(a, b)| [*a, *b]).collect()
    }

    /// Vector components `σ^{ij} ∂_j f = (∂_θ f, ∂_φ f / sin²θ)`.
    pub fn contravariant_gradient(&self) -> Vec<[f64; 2]> {
        self.gradient()
            .into_iter()
            .enumerate()
            .map(|(k, [a, b])| {
                let s = self.grid.sin_theta(k);
                [a, b / (s * s)]
            })
            .collect()
    }

    /// `|∇f|²` in the round metric.
    pub fn gradient_norm_sq(&self) -> ScalarField {
        let g = self.gradient();
        self.with_values(
            g.iter()
                .enumerate()
                .map(|(k, [a, b])| {
                    let s = self.grid.sin_theta(k);
                    a * a + b * b / (s * s)
                })
                .collect(),
        )
    }

    /// Covariant Hessian `∇_i∇_j f` of the round metric.
    pub fn hessian(&self) -> CovariantTensor2 {
        let d = self.derivatives();
        CovariantTensor2 {
            grid: self.grid.clone(),
            components: hessian_components(&self.grid, &d),
        }
    }

    pub fn laplacian(&self) -> ScalarField {
        self.with_values(self.grid.laplacian(&self.values))
    }
}

pub(crate) fn hessian_components(grid: &Grid, d: &Derivatives) -> Vec<Sym2> {
    (0..grid.len())
        .map(|k| {
            let (s, c) = (grid.sin_theta(k), grid.cos_theta(k));
            Sym2::new(
                d.d_theta_theta[k],
                d.d_theta_phi[k] - c / s * d.d_phi[k],
                d.d_phi_phi[k] + s * c * d.d_theta[k],
            )
        })
        .collect()
}

/// Symmetric covariant 2-tensor field, stored as `(θ, φ)` chart components.
#[derive(Debug, Clone)]
pub struct CovariantTensor2 {
    grid: Arc<Grid>,
    components: Vec<Sym2>,
}

impl CovariantTensor2 {
    pub fn new(grid: Arc<Grid>, components: Vec<Sym2>) -> Result<Self> {
        if components.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                found: components.len(),
            });
        }
        Ok(CovariantTensor2 { grid, components })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> &[Sym2] {
        &self.components
    }

    /// Trace with respect to the round metric, `σ^{ij} T_ij`.
    pub fn round_trace(&self) -> ScalarField {
        let values = self
            .components
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let s = self.grid.sin_theta(k);
                t.tt + t.pp / (s * s)
            })
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Largest component difference against another tensor field on the same grid.
    pub fn sup_difference(&self, other: &CovariantTensor2) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0, |acc, (a, b)| acc.max(a.sub(b).max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nt: usize, np: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(nt, np).unwrap()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(7, 16).is_err());
        assert!(GridSpec::new(8, 14).is_err());
        assert!(GridSpec::new(8, 17).is_err());
        assert!(GridSpec::new(8, 16).is_ok());
        let parsed: GridSpec = "64x128".parse().unwrap();
        assert_eq!(parsed, GridSpec { n_theta: 64, n_phi: 128 });
        assert!("64by128".parse::<GridSpec>().is_err());
    }

    #[test]
    fn quadrature_of_simple_integrands() {
        let g = grid(32, 64);
        let one = ScalarField::constant(g.clone(), 1.0);
        assert!((one.integrate() / (4.0 * PI) - 1.0).abs() < 1e-12);
        let c = ScalarField::from_fn(g.clone(), |t, _| t.cos()).unwrap();
        assert!(c.integrate().abs() < 1e-14);
        let c2 = ScalarField::from_fn(g, |t, _| t.cos().powi(2)).unwrap();
        assert!((c2.integrate() - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn nodes_avoid_the_poles() {
        let g = grid(16, 32);
        assert!(g.thetas().iter().all(|t| *t > 0.0 && *t < PI));
        assert!(g.thetas().windows(2).all(|w| w[0] < w[1]));
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn gradient_of_cos_theta() {
        let g = grid(16, 32);
        let f = ScalarField::from_fn(g.clone(), |t, _| t.cos()).unwrap();
        for (k, [dt, dp]) in f.gradient().into_iter().enumerate() {
            assert!((dt + g.sin_theta(k)).abs() < 1e-13);
            assert!(dp.abs() < 1e-13);
        }
        let c = ScalarField::constant(g, 2.5);
        assert!(c.gradient().iter().all(|[a, b]| a.abs() < 1e-13 && b.abs() < 1e-13));
    }

    #[test]
    fn laplacian_eigenvalues() {
        let g = grid(16, 32);
        let f = ScalarField::from_fn(g.clone(), |t, _| t.cos()).unwrap();
        let lap = f.laplacian();
        for (a, b) in lap.values().iter().zip(f.values()) {
            assert!((a + 2.0 * b).abs() < 1e-12);
        }
        let y22 = ScalarField::from_fn(g, |t, p| t.sin().powi(2) * (2.0 * p).cos()).unwrap();
        for (a, b) in y22.laplacian().values().iter().zip(y22.values()) {
            assert!((a + 6.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_of_degree_one_harmonic() {
        let g = grid(16, 32);
        let f = ScalarField::from_fn(g.clone(), |t, p| t.sin() * p.cos()).unwrap();
        let hess = f.hessian();
        for (k, h) in hess.components().iter().enumerate() {
            let s = g.sin_theta(k);
            let v = f.values()[k];
            assert!((h.tt + v).abs() < 1e-12);
            assert!(h.tp.abs() < 1e-12);
            assert!((h.pp + v * s * s).abs() < 1e-12);
        }
    }

    #[test]
    fn point_evaluation_reproduces_band_limited_field() {
        let g = grid(16, 32);
        let f = |t: f64, p: f64| 1.0 + 0.3 * t.cos() + 0.2 * t.sin().powi(3) * (3.0 * p).sin();
        let field = ScalarField::from_fn(g, f).unwrap();
        let spec = field.spectrum();
        for (t, p) in [(0.1, 0.2), (1.3, 4.0), (3.0, 6.1)] {
            assert!((spec.evaluate(t, p) - f(t, p)).abs() < 1e-13);
        }
    }

    #[test]
    fn filter_leaves_low_degrees_alone() {
        let g = grid(16, 32);
        let field = ScalarField::from_fn(g.clone(), |t, p| t.sin().powi(2) * (2.0 * p).cos()).unwrap();
        let filtered = g.filter(field.values(), 10.0);
        for (a, b) in filtered.iter().zip(field.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
