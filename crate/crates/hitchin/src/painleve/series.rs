//! Small-ρ expansion `ψ(ρ) = -(1/3) log ρ - log S(ρ^{4/3})`, `S(x) = Σ a_j x^j`.
//!
//! With `x = ρ^{4/3}` and `D = x d/dx` the ODE becomes
//! `D² log S = -(9/64) (x S^{-2} - x² S²)`.

use crate::error::{param, Result};

/// Coefficients `a_0..a_n` for a given leading coefficient `a_0 > 0`.
pub fn series_small_rho(n: usize, a0: f64) -> Result<Vec<f64>> {
    if !(a0 > 0.0 && a0.is_finite()) {
        return param(format!("leading series coefficient must be positive, got {a0}"));
    }
    // work with L = log S = Σ l_j x^j
    let mut l = vec![0.0; n + 1];
    l[0] = a0.ln();
    for j in 1..=n {
        let inv_sq = exp_series(&l[..j], -2.0);
        let sq = if j >= 2 { exp_series(&l[..j - 1], 2.0) } else { Vec::new() };
        let a = inv_sq[j - 1];
        let b = if j >= 2 { sq[j - 2] } else { 0.0 };
        l[j] = -(9.0 / 64.0) * (a - b) / (j * j) as f64;
    }
    let s = exp_series(&l, 1.0);
    if s.iter().any(|v| !v.is_finite()) {
        return param("series recursion produced non-finite coefficients");
    }
    Ok(s)
}

/// Coefficients of `exp(c P(x))` truncated to the length of `p`.
fn exp_series(p: &[f64], c: f64) -> Vec<f64> {
    let m = p.len();
    let mut e = vec![0.0; m];
    if m == 0 {
        return e;
    }
    e[0] = (c * p[0]).exp();
    for k in 1..m {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * c * p[j] * e[k - j];
        }
        e[k] = acc / k as f64;
    }
    e
}

/// `(ψ, ψ')` from the truncated series.
pub fn series_eval(a: &[f64], rho: f64) -> (f64, f64) {
    let x = rho.powf(4.0 / 3.0);
    let mut s = 0.0;
    let mut ds = 0.0;
    for (j, aj) in a.iter().enumerate().rev() {
        s = s * x + aj;
        if j > 0 {
            ds = ds * x + j as f64 * aj;
        }
    }
    // ds now holds Σ j a_j x^{j-1}
    let psi = -rho.ln() / 3.0 - s.ln();
    let dpsi = -1.0 / (3.0 * rho) - (ds / s) * (4.0 / 3.0) * rho.cbrt();
    (psi, dpsi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_coefficient_follows_from_leading_balance() {
        for a0 in [0.5, 0.98918214, 2.0] {
            let a = series_small_rho(1, a0).unwrap();
            assert_eq!(a[0], a0);
            assert!((a[1] - (-9.0 / (64.0 * a0))).abs() < 1e-15);
        }
    }

    #[test]
    fn second_coefficient_matches_hand_expansion() {
        // l1 = -9/(64 a0^2), l2 = -(9/64)(-2 l1 a0^{-2} - a0^2)/4
        let a0: f64 = 1.3;
        let l1 = -9.0 / (64.0 * a0 * a0);
        let l2 = -(9.0 / 64.0) * (-2.0 * l1 / (a0 * a0) - a0 * a0) / 4.0;
        let a2 = a0 * (l2 + 0.5 * l1 * l1);
        let a = series_small_rho(2, a0).unwrap();
        assert!((a[2] - a2).abs() < 1e-15);
    }

    #[test]
    fn truncated_series_nearly_solves_the_ode() {
        let a = series_small_rho(2, 0.98918214).unwrap();
        let rho: f64 = 0.01;
        // (ρ∂ρ)²ψ = ρψ' + ρ²ψ'' with ψ'' by central differences of ψ'
        let h = 1e-6 * rho;
        let (psi, d0) = series_eval(&a, rho);
        let dp = (series_eval(&a, rho + h).1 - series_eval(&a, rho - h).1) / (2.0 * h);
        let lhs = rho * d0 + rho * rho * dp;
        let rhs = 0.5 * rho * rho * (2.0 * psi).sinh();
        assert!((lhs - rhs).abs() < 1e-4);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let a = series_small_rho(3, 1.1).unwrap();
        let rho = 0.03;
        let h = 1e-7;
        let fd = (series_eval(&a, rho + h).0 - series_eval(&a, rho - h).0) / (2.0 * h);
        assert!((series_eval(&a, rho).1 - fd).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_leading_coefficient() {
        assert!(series_small_rho(3, 0.0).is_err());
    }
}
