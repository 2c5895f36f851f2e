//! The radial Painlevé III equation `(ρ∂ρ)²ψ = ½ρ² sinh 2ψ` with
//! `ψ ~ -(1/3) log ρ` at 0 and exponential decay at infinity.

mod bessel;
mod series;

pub use bessel::{bessel_k0, bessel_k1};
pub use series::{series_eval, series_small_rho};

use crate::error::{param, Error, Result};
use crate::grid::{make_log_grid, Layout, RadialGrid};

pub const DEFAULT_RHO_MIN: f64 = 1e-3;
pub const DEFAULT_RHO_MAX: f64 = 10.0;
pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const SERIES_TERMS: usize = 3;
const RHO_MATCH: f64 = 1.0;
const MAX_STEP: f64 = 5e-4;
const MAX_NEWTON: usize = 40;

#[derive(Debug, Clone)]
pub struct PainleveSolution {
    pub rho_grid: RadialGrid,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
    pub a_coeffs: Vec<f64>,
    /// Amplitude `c` of the large-ρ envelope `ψ ≈ c K0(ρ)`.
    pub amplitude: f64,
    pub match_residual: f64,
}

/// Right-hand side in `s = log ρ`: `y = (ψ, ψ_s)`, plus the variational pair.
fn rhs(s: f64, y: [f64; 4]) -> [f64; 4] {
    let e = (2.0 * s).exp();
    [y[1], 0.5 * e * (2.0 * y[0]).sinh(), y[3], e * (2.0 * y[0]).cosh() * y[2]]
}

fn rk4_step(s: f64, y: [f64; 4], h: f64) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
    let k1 = rhs(s, y);
    let k2 = rhs(s + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = rhs(s + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = rhs(s + h, add(y, k3, h));
    let mut out = y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrate from `s0` to each target in order, recording the state there.
fn integrate(s0: f64, y0: [f64; 4], targets: &[f64]) -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(targets.len());
    let (mut s, mut y) = (s0, y0);
    for &st in targets {
        let span = st - s;
        let m = (span.abs() / MAX_STEP).ceil().max(1.0) as usize;
        let h = span / m as f64;
        for _ in 0..m {
            y = rk4_step(s, y, h);
            s += h;
        }
        s = st;
        out.push(y);
    }
    out
}

fn left_seed(a0: f64, rho: f64) -> Result<[f64; 2]> {
    let a = series_small_rho(SERIES_TERMS, a0)?;
    let (p, dp) = series_eval(&a, rho);
    Ok([p, rho * dp])
}

fn right_seed(c: f64, rho: f64) -> [f64; 2] {
    [c * bessel::k0(rho), -c * rho * bessel::k1(rho)]
}

/// Two-sided shooting with Newton matching at `ρ* = 1`.
pub fn solve_painleve(rho_min: f64, rho_max: f64, n: usize, tol: f64) -> Result<PainleveSolution> {
    if !(rho_min > 0.0 && rho_min <= 0.05) {
        return param(format!("rho_min must lie in (0, 0.05], got {rho_min}"));
    }
    if !(rho_max >= 10.0 && rho_max.is_finite()) {
        return param(format!("rho_max must be at least 10, got {rho_max}"));
    }
    if !(tol >= 1e-12) {
        return param(format!("tolerance must be at least 1e-12, got {tol}"));
    }
    if n < 8 {
        return param(format!("need at least 8 nodes, got {n}"));
    }
    let grid = make_log_grid(rho_min, rho_max, n)?;
    let (s_min, s_max, s_match) = (rho_min.ln(), rho_max.ln(), RHO_MATCH.ln());
    let nodes = grid.nodes().to_vec();
    let split = nodes.partition_point(|&r| r <= RHO_MATCH);
    // shooting follows the same substep pattern as the final recording pass
    let mut left_path: Vec<f64> = nodes[1..split].iter().map(|r| r.ln()).collect();
    left_path.push(s_match);
    let mut right_path: Vec<f64> = nodes[split..n - 1].iter().rev().map(|r| r.ln()).collect();
    right_path.push(s_match);

    let shoot = |a0: f64, c: f64| -> Result<([f64; 2], [[f64; 2]; 2])> {
        let l = left_seed(a0, rho_min)?;
        let da = 1e-6 * a0;
        let lp = left_seed(a0 + da, rho_min)?;
        let lm = left_seed(a0 - da, rho_min)?;
        let dl = [(lp[0] - lm[0]) / (2.0 * da), (lp[1] - lm[1]) / (2.0 * da)];
        let yl = *integrate(s_min, [l[0], l[1], dl[0], dl[1]], &left_path).last().unwrap();
        let r = right_seed(c, rho_max);
        let dr = right_seed(1.0, rho_max);
        let yr = *integrate(s_max, [r[0], r[1], dr[0], dr[1]], &right_path).last().unwrap();
        let f = [yl[0] - yr[0], yl[1] - yr[1]];
        let jac = [[yl[2], -yr[2]], [yl[3], -yr[3]]];
        Ok((f, jac))
    };

    let (mut a0, mut c) = (1.0, 0.3);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let (f, j) = shoot(a0, c)?;
        residual = f[0].abs().max(f[1].abs());
        if !residual.is_finite() {
            break;
        }
        if residual <= tol {
            converged = true;
        }
        // keep polishing past tol so the two halves join smoothly
        if converged && residual <= 1e-13 {
            break;
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let da = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let dc = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        if converged && da.abs() <= 1e-15 * a0 && dc.abs() <= 1e-15 * c.abs() {
            break;
        }
        a0 -= da;
        c -= dc;
        if a0 <= 0.0 {
            a0 = 0.5 * (a0 + da);
        }
    }
    if !converged {
        return Err(Error::Convergence { what: "Painlevé shooting".into(), residual });
    }

    let a_coeffs = series_small_rho(SERIES_TERMS, a0)?;
    let mut psi = vec![0.0; n];
    let mut psi_prime = vec![0.0; n];
    let l = left_seed(a0, rho_min)?;
    psi[0] = l[0];
    psi_prime[0] = l[1] / rho_min;
    let left_targets: Vec<f64> = nodes[1..split].iter().map(|r| r.ln()).collect();
    for (k, y) in integrate(s_min, [l[0], l[1], 0.0, 0.0], &left_targets).into_iter().enumerate() {
        psi[k + 1] = y[0];
        psi_prime[k + 1] = y[1] / nodes[k + 1];
    }
    let r = right_seed(c, rho_max);
    psi[n - 1] = r[0];
    psi_prime[n - 1] = r[1] / rho_max;
    let right_targets: Vec<f64> = nodes[split..n - 1].iter().rev().map(|r| r.ln()).collect();
    for (k, y) in integrate(s_max, [r[0], r[1], 0.0, 0.0], &right_targets).into_iter().enumerate() {
        let i = n - 2 - k;
        psi[i] = y[0];
        psi_prime[i] = y[1] / nodes[i];
    }
    Ok(PainleveSolution { rho_grid: grid, psi, psi_prime, a_coeffs, amplitude: c, match_residual: residual })
}

/// Solve once with the default parameters and reuse.
pub fn default_solution() -> &'static PainleveSolution {
    static SOL: std::sync::OnceLock<PainleveSolution> = std::sync::OnceLock::new();
    SOL.get_or_init(|| {
        solve_painleve(DEFAULT_RHO_MIN, DEFAULT_RHO_MAX, DEFAULT_N, DEFAULT_TOL)
            .expect("default Painlevé solve converges")
    })
}

/// `ψ''` from the ODE.
fn second_derivative(rho: f64, psi: f64, dpsi: f64) -> f64 {
    (0.5 * rho * rho * (2.0 * psi).sinh() - rho * dpsi) / (rho * rho)
}

impl PainleveSolution {
    pub fn rho_min(&self) -> f64 {
        self.rho_grid.r_min()
    }
    pub fn rho_max(&self) -> f64 {
        self.rho_grid.r_max()
    }

    /// `(ψ, ψ')` at any positive ρ.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        let (p, d, _) = self.eval_jets(rho);
        (p, d)
    }

    /// `(ψ, ψ', ψ'')`; `ψ''` always comes from the ODE.
    pub fn eval_jets(&self, rho: f64) -> (f64, f64, f64) {
        let nodes = self.rho_grid.nodes();
        let (p, d) = if rho < self.rho_min() {
            series_eval(&self.a_coeffs, rho)
        } else if rho > self.rho_max() {
            let c = self.amplitude;
            (c * bessel::k0(rho), -c * bessel::k1(rho))
        } else {
            match nodes.binary_search_by(|x| x.total_cmp(&rho)) {
                Ok(k) => (self.psi[k], self.psi_prime[k]),
                Err(k) => {
                    let i = k.clamp(1, nodes.len() - 1) - 1;
                    self.hermite(i, rho)
                }
            }
        };
        (p, d, second_derivative(rho, p, d))
    }

    /// Cubic Hermite interpolation of ψ and of ψ' (using ψ'' from the ODE).
    fn hermite(&self, i: usize, rho: f64) -> (f64, f64) {
        let nodes = self.rho_grid.nodes();
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let h = x1 - x0;
        let u = (rho - x0) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        let (p0, p1) = (self.psi[i], self.psi[i + 1]);
        let (d0, d1) = (self.psi_prime[i], self.psi_prime[i + 1]);
        let (s0, s1) = (second_derivative(x0, p0, d0), second_derivative(x1, p1, d1));
        let p = h00 * p0 + h * h10 * d0 + h01 * p1 + h * h11 * d1;
        let d = h00 * d0 + h * h10 * s0 + h01 * d1 + h * h11 * s1;
        (p, d)
    }

    /// Maximum over interior nodes of `|(ρ∂ρ)²ψ - ½ρ² sinh 2ψ|`, with the
    /// outer derivative taken by the grid differentiator of the given order.
    pub fn ode_residual(&self, order: usize) -> Result<f64> {
        let g = RadialGrid::new(self.rho_min(), self.rho_max(), self.rho_grid.len(), Layout::Logarithmic, order)?;
        let nodes = g.nodes();
        let flux: Vec<f64> = nodes.iter().zip(&self.psi_prime).map(|(r, d)| r * d).collect();
        let dflux = g.differentiate(&flux)?;
        let n = nodes.len();
        Ok((1..n - 1)
            .map(|k| {
                let lhs = nodes[k] * dflux[k];
                let rhs = 0.5 * nodes[k] * nodes[k] * (2.0 * self.psi[k]).sinh();
                (lhs - rhs).abs()
            })
            .fold(0.0, f64::max))
    }

    /// `max |ψ/K0 - 1|` over the nodes in `[lo, hi]`.
    pub fn k0_ratio_deviation(&self, lo: f64, hi: f64) -> f64 {
        self.rho_grid
            .nodes()
            .iter()
            .zip(&self.psi)
            .filter(|(r, _)| **r >= lo && **r <= hi)
            .map(|(r, p)| (p / bessel::k0(*r) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_positive_decreasing(&self) -> bool {
        self.psi.iter().all(|p| *p > 0.0) && self.psi.windows(2).all(|w| w[1] < w[0])
    }
}
