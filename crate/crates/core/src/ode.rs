//! Adaptive Dormand–Prince 5(4) integration of autonomous ODEs `ẏ = F(y)`.

use nalgebra::SVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Abort once `|y|` exceeds this bound.
    pub blow_up: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-10,
            blow_up: 1e12,
            max_steps: 1_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights are the last row of A (FSAL); these are the fourth-order ones.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Value of the solution at time `t` (which may be negative).
pub fn integrate<const D: usize>(
    rhs: impl Fn(&SVector<f64, D>) -> SVector<f64, D>,
    y0: SVector<f64, D>,
    t: f64,
    tol: Tolerance,
) -> Result<SVector<f64, D>> {
    if t == 0.0 {
        return Ok(y0);
    }
    let dir = t.signum();
    let span = t.abs();
    let mut y = y0;
    let mut done = 0.0;
    let mut h = (0.01 * span).min(0.01);
    let mut k0 = rhs(&y);
    let min_h = 1e-14 * span.max(1.0);

    for _ in 0..tol.max_steps {
        if done >= span {
            return Ok(y);
        }
        let last = done + h >= span;
        let step = if last { span - done } else { h };
        let hs = dir * step;

        let mut k = [SVector::<f64, D>::zeros(); 7];
        k[0] = k0;
        for s in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    yi += kj * (hs * A[s][j]);
                }
            }
            k[s] = rhs(&yi);
        }
        let mut y5 = y;
        for j in 0..6 {
            y5 += k[j] * (hs * A[6][j]);
        }
        let mut err = SVector::<f64, D>::zeros();
        for j in 0..7 {
            err += k[j] * (hs * (A[6].get(j).copied().unwrap_or(0.0) - B4[j]));
        }
        let mut norm: f64 = 0.0;
        for i in 0..D {
            let scale = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            norm = norm.max(err[i].abs() / scale);
        }
        if !norm.is_finite() {
            return Err(Error::FlowBlowUp {
                detail: format!("non-finite state near t = {}", dir * done),
            });
        }

        if norm <= 1.0 {
            done = if last { span } else { done + step };
            y = y5;
            k0 = k[6];
            if y.norm() > tol.blow_up {
                return Err(Error::FlowBlowUp {
                    detail: format!("|x| exceeded {:e} at t = {}", tol.blow_up, dir * done),
                });
            }
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = step * factor;
        if h < min_h && done < span {
            return Err(Error::FlowBlowUp {
                detail: format!("step size underflow at t = {}", dir * done),
            });
        }
    }
    Err(Error::FlowBlowUp {
        detail: format!("step budget of {} exhausted", tol.max_steps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn exponential_growth() {
        let y = integrate(|y: &SVector<f64, 1>| y * 0.3, SVector::<f64, 1>::new(1.0), 2.0, Tolerance::default()).unwrap();
        assert!((y[0] - 0.6f64.exp()).abs() < 1e-9);
        let back = integrate(|y: &SVector<f64, 1>| y * 0.3, y, -2.0, Tolerance::default()).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let f = |y: &Vector2<f64>| Vector2::new(y[1], -y[0]);
        let y = integrate(f, Vector2::new(1.0, 0.0), 2.0 * std::f64::consts::PI, Tolerance::default()).unwrap();
        assert!((y - Vector2::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn finite_time_blow_up_is_reported() {
        // ẏ = y², y(0) = 1 blows up at t = 1.
        let err = integrate(|y: &SVector<f64, 1>| y.component_mul(y), SVector::<f64, 1>::new(1.0), 2.0, Tolerance::default());
        assert!(matches!(err, Err(Error::FlowBlowUp { .. })));
    }
}
