//! Plain elementary symmetric polynomials, `σ_k(1, …, 1) = C(n, k)`.

/// `[σ_0, σ_1, …, σ_n]` of `x`.
pub fn elementary(x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; x.len() + 1];
    e[0] = 1.0;
    for (i, xi) in x.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += xi * e[k - 1];
        }
    }
    e
}

/// `σ_k(x)`; zero for `k > n`.
pub fn sigma(x: &[f64], k: usize) -> f64 {
    if k > x.len() {
        return 0.0;
    }
    elementary(x)[k]
}

/// `σ_k` of `x` with the entries at `skip` removed.
pub fn sigma_without(x: &[f64], k: usize, skip: &[usize]) -> f64 {
    let rest: Vec<f64> = x
        .iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, v)| *v)
        .collect();
    sigma(&rest, k)
}

/// `∂σ_k/∂x_i = σ_{k-1}(x | i)`.
pub fn sigma_gradient(x: &[f64], k: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| if k == 0 { 0.0 } else { sigma_without(x, k - 1, &[i]) })
        .collect()
}

/// `∂²σ_k/∂x_i∂x_j = σ_{k-2}(x | i, j)` off the diagonal, zero on it.
pub fn sigma_hessian(x: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut h = vec![vec![0.0; n]; n];
    if k < 2 {
        return h;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = sigma_without(x, k - 2, &[i, j]);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    h
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_give_binomials() {
        for n in 1..6 {
            let e = elementary(&vec![1.0; n]);
            for (k, v) in e.iter().enumerate() {
                assert_eq!(*v, binomial(n, k));
            }
        }
    }

    #[test]
    fn two_variables() {
        let e = elementary(&[2.0, 0.5]);
        assert_eq!(e, vec![1.0, 2.5, 1.0]);
        assert_eq!(sigma(&[2.0, 0.5], 3), 0.0);
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_difference(x in proptest::collection::vec(-2.0f64..2.0, 1..5), k in 0usize..5) {
            let g = sigma_gradient(&x, k);
            let h = 1e-6;
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (sigma(&xp, k) - sigma(&xm, k)) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()));
            }
        }

        #[test]
        fn homogeneous_of_degree_k(x in proptest::collection::vec(-2.0f64..2.0, 1..5), c in 0.1f64..3.0) {
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            for k in 0..=x.len() {
                let a = sigma(&scaled, k);
                let b = c.powi(k as i32) * sigma(&x, k);
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
