//! Macdonald functions K0 and K1.

use crate::error::{param, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// K0(x) for x > 0.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check(x)?;
    Ok(k0(x))
}

/// K1(x) for x > 0.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check(x)?;
    Ok(k1(x))
}

fn check(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return param(format!("Bessel argument must be positive and finite, got {x}"));
    }
    Ok(())
}

pub(crate) fn k0(x: f64) -> f64 {
    if x <= 2.0 {
        k0_series(x)
    } else {
        k_integral(x, 0.0)
    }
}

pub(crate) fn k1(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x)
    } else {
        k_integral(x, 1.0)
    }
}

fn k0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let (mut term, mut harmonic) = (1.0, 0.0);
    let (mut i0, mut rest) = (1.0, 0.0);
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        rest += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -lg * i0 + rest
}

fn k1_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    // term_k = y^k / (k! (k+1)!), digamma(k+1) = H_k - gamma
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i1 = 0.0;
    let mut rest = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            term *= y / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let h_next = harmonic + 1.0 / (kf + 1.0);
        i1 += term;
        rest += term * (harmonic + h_next - 2.0 * EULER_GAMMA);
        if k > 2 && term < 1e-18 * i1 {
            break;
        }
    }
    1.0 / x + (0.5 * x).ln() * 0.5 * x * i1 - 0.25 * x * rest
}

/// `K_nu(x) = ∫_0^∞ e^{-x cosh s} cosh(nu s) ds` by the trapezoidal rule,
/// which converges geometrically for this entire, rapidly decaying integrand.
fn k_integral(x: f64, nu: f64) -> f64 {
    let h = (0.3 / x.sqrt()).min(0.05);
    let mut acc = 0.5;
    let mut k = 1;
    loop {
        let s = k as f64 * h;
        let e = x * (s.cosh() - 1.0);
        if e > 45.0 {
            break;
        }
        acc += (-e).exp() * (nu * s).cosh();
        k += 1;
    }
    acc * h * (-x).exp()
}
