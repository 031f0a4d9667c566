//! Fully normalized associated Legendre functions and their colatitude
//! derivatives.
//!
//! `P̄_l^m(cos θ)` carries the factor `sqrt((2l+1)/(4π) (l-m)!/(l+m)!)` and no
//! Condon–Shortley phase, so `∫_{S²} (P̄_l^m)² dμ = 1` for `m = 0` and
//! `∫_{S²} (P̄_l^m cos mφ)² dμ = 1/2` for `m > 0`.

use std::f64::consts::PI;

/// Index into a lower-triangular `(l, m)` array with `m <= l`.
#[inline]
pub(crate) fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub(crate) fn tri_len(lmax: usize) -> usize {
    tri(lmax, lmax) + 1
}

/// Values `P̄_l^m(cos θ)` for all `0 <= m <= l <= lmax`, written into `p`
/// (triangular layout), and `dP̄/dθ` into `dp`.
pub(crate) fn legendre_with_derivative(
    lmax: usize,
    cos_theta: f64,
    sin_theta: f64,
    p: &mut [f64],
    dp: &mut [f64],
) {
    let x = cos_theta;
    let s = sin_theta;
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        p[tri(m, m)] = pmm;
        if m < lmax {
            p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        }
        let mf = m as f64;
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }

    // Ladder relations, free of 1/sin θ.
    for l in 0..=lmax {
        let lf = l as f64;
        dp[tri(l, 0)] = if l == 0 {
            0.0
        } else {
            -(lf * (lf + 1.0)).sqrt() * p[tri(l, 1)]
        };
        for m in 1..=l {
            let mf = m as f64;
            let down = ((lf + mf) * (lf - mf + 1.0)).sqrt() * p[tri(l, m - 1)];
            let up = if m < l {
                ((lf - mf) * (lf + mf + 1.0)).sqrt() * p[tri(l, m + 1)]
            } else {
                0.0
            };
            dp[tri(l, m)] = 0.5 * (down - up);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(lmax: usize, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let n = tri_len(lmax);
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n];
        legendre_with_derivative(lmax, theta.cos(), theta.sin(), &mut p, &mut dp);
        (p, dp)
    }

    #[test]
    fn low_degree_closed_forms() {
        let theta: f64 = 0.7;
        let (p, _) = eval(3, theta);
        let (c, s) = (theta.cos(), theta.sin());
        let k = 1.0 / (4.0 * PI).sqrt();
        assert!((p[tri(0, 0)] - k).abs() < 1e-15);
        assert!((p[tri(1, 0)] - (3.0f64).sqrt() * k * c).abs() < 1e-15);
        assert!((p[tri(1, 1)] - (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        // P_2^2 = 3 s², N_2^2 = sqrt(5/(4π)/24)
        assert!((p[tri(2, 2)] - (5.0 / (96.0 * PI)).sqrt() * 3.0 * s * s).abs() < 1e-15);
        // P_2^0 = (3c² - 1)/2
        assert!((p[tri(2, 0)] - (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * c * c - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let lmax = 20;
        let theta = 1.1;
        let h = 1e-6;
        let (_, dp) = eval(lmax, theta);
        let (pp, _) = eval(lmax, theta + h);
        let (pm, _) = eval(lmax, theta - h);
        for l in 0..=lmax {
            for m in 0..=l {
                let fd = (pp[tri(l, m)] - pm[tri(l, m)]) / (2.0 * h);
                assert!(
                    (fd - dp[tri(l, m)]).abs() < 1e-6,
                    "l={l} m={m}: {fd} vs {}",
                    dp[tri(l, m)]
                );
            }
        }
    }
}
