//! Dependence of the degree-2 blocks on `t`.
//!
//! Under `r = t^{-2/3} s` the operator `D²_t` becomes `t^{4/3} D²_1`, so a
//! grid in `r` that is a scaled copy of a fixed grid in `s` makes the
//! discrete blocks exactly covariant. The routines here use this: the
//! `r`-grid for `t` is `t^{-2/3}` times a prefix of one logarithmic `s`-grid,
//! so node `i` means the same `s` (and `ρ = (8/3)s^{3/2}`) for every `t`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param, Result};
use crate::fiducial::{build_fiducial, rho_of};
use crate::grid::make_log_grid;
use crate::painleve::PainleveSolution;

use super::decay::fit_line;
use super::operator::{MeshBackground, ModeVector, RadialOperatorMatrix};
use super::sector::{SectorLayout, Sign};
use super::Mesh;

/// Assemble the `H_ℓ^±` block for `t` on a logarithmic grid `[r_min, r_max]`.
pub fn assemble_mode(
    sol: &PainleveSolution,
    t: f64,
    ell: u32,
    sign: Sign,
    r: (f64, f64),
    n: usize,
) -> Result<RadialOperatorMatrix> {
    let mesh = Arc::new(Mesh::new(Arc::new(make_log_grid(r.0, r.1, n)?))?);
    let fd = build_fiducial(sol, t, mesh.nodes().clone())?;
    let bg = MeshBackground::new(&fd, mesh.clone())?;
    RadialOperatorMatrix::assemble(&bg, Arc::new(SectorLayout::degree2(mesh, ell, sign)?))
}

/// Smallest eigenvalue of the `H_0^+` block at `t = 1` on `[10^{-3}, 1]`,
/// from a dense solve on 597 nodes.
pub const UNIT_DISK_LAMBDA: f64 = 2.697_575_551_515_232_7;

/// Exponent of `t ↦ λ_t` on shrinking disks.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenScaling {
    pub ell: u32,
    pub sign: Sign,
    pub ts: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Log-log slope of `λ_t` against `t`.
    pub exponent: f64,
    /// Largest relative deviation of `t^{-4/3} λ_t` from its mean.
    pub rescaled_spread: f64,
}

/// Smallest eigenvalue on `[ε c t^{-2/3}, c t^{-2/3}]` for each `t`.
pub fn eigen_scaling(sol: &PainleveSolution, ell: u32, sign: Sign, ts: &[f64], c: f64, eps: f64, n: usize) -> Result<EigenScaling> {
    if ts.len() < 2 || !(c > 0.0 && eps > 0.0 && eps < 1.0) {
        return param("eigen scaling needs two or more t and 0 < eps < 1 < c");
    }
    let lambdas = ts
        .par_iter()
        .map(|&t| {
            let big = c * t.powf(-2.0 / 3.0);
            assemble_mode(sol, t, ell, sign, (eps * big, big), n)?.smallest_eigenvalue()
        })
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let (exponent, _) = fit_line(&lx, &ly);
    let resc: Vec<f64> = ts.iter().zip(&lambdas).map(|(t, l)| l * t.powf(-4.0 / 3.0)).collect();
    let mean = resc.iter().sum::<f64>() / resc.len() as f64;
    let rescaled_spread = resc.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    Ok(EigenScaling { ell, sign, ts: ts.to_vec(), lambdas, exponent, rescaled_spread })
}

/// `1/λ_min` over all degree-2 blocks with `ℓ ≤ ell_max` on the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenUniformity {
    pub ts: Vec<f64>,
    pub inverse_lambda: Vec<f64>,
    /// `(ℓ, sign)` attaining the minimum for each `t`.
    pub worst_block: Vec<(u32, Sign)>,
}

impl GreenUniformity {
    pub fn ratio(&self) -> f64 {
        let hi = self.inverse_lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.inverse_lambda.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

pub fn green_uniformity(sol: &PainleveSolution, ts: &[f64], ell_max: u32, r_min: f64, n: usize) -> Result<GreenUniformity> {
    let blocks: Vec<(f64, u32, Sign)> = ts
        .iter()
        .flat_map(|&t| {
            (0..=ell_max).flat_map(move |l| {
                let minus = (l >= 1).then_some((t, l, Sign::Minus));
                std::iter::once((t, l, Sign::Plus)).chain(minus)
            })
        })
        .collect();
    let lams = blocks
        .par_iter()
        .map(|&(t, l, s)| assemble_mode(sol, t, l, s, (r_min, 1.0), n)?.smallest_eigenvalue())
        .collect::<Result<Vec<f64>>>()?;
    let mut inverse_lambda = Vec::new();
    let mut worst_block = Vec::new();
    for &t in ts {
        let (i, lam) = blocks
            .iter()
            .zip(&lams)
            .enumerate()
            .filter(|(_, (b, _))| b.0 == t)
            .map(|(i, (_, l))| (i, *l))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one block per t");
        inverse_lambda.push(1.0 / lam);
        worst_block.push((blocks[i].1, blocks[i].2));
    }
    Ok(GreenUniformity { ts: ts.to_vec(), inverse_lambda, worst_block })
}

/// Grid family for the model problem: `s`-nodes `s_min · e^{kδ}` with
/// `δ = (2/3) ln 2 / per_octave`, so that `t = 2^j` ends at `s = t^{2/3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelGrid {
    /// Number of `s`-steps between `s_min` and 1.
    pub inner_steps: usize,
    /// Steps per doubling of `t`.
    pub per_octave: usize,
}

impl Default for ModelGrid {
    fn default() -> Self {
        ModelGrid { inner_steps: 360, per_octave: 24 }
    }
}

impl ModelGrid {
    fn delta(&self) -> f64 {
        (2.0f64).ln() * 2.0 / 3.0 / self.per_octave as f64
    }

    fn s_min(&self) -> f64 {
        (-(self.inner_steps as f64) * self.delta()).exp()
    }

    /// Node count for the disk of `s`-radius `2^{2j/3}`.
    fn nodes(&self, j: u32) -> usize {
        self.inner_steps + j as usize * self.per_octave + 1
    }
}

/// Curve collapse and remainder decay for the scaled source family
/// `η((8/3) t r^{3/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelScaling {
    pub ts: Vec<f64>,
    /// `max_{t,t'} sup_ρ |t^{4/3}u_t - t'^{4/3}u_{t'}|` relative to the peak.
    pub collapse: f64,
    /// The same for the unit-disk solutions `ξ_t` over `s ≤ 1`; not expected
    /// to be small at `t = 1`, where the disk edge sits at `s = 1`.
    pub solution_collapse: f64,
    /// `‖ξ_t - u_t‖_{L²}` on the unit disk.
    pub remainder_norms: Vec<f64>,
    pub remainder_slope: f64,
    pub peak: f64,
}

/// Smooth source in `ρ`, supported in `ρ < rho_c`.
pub fn model_source(rho: f64, rho_c: f64) -> f64 {
    if rho < rho_c {
        (std::f64::consts::PI * rho / rho_c).sin().powi(2)
    } else {
        0.0
    }
}

fn model_solve(sol: &PainleveSolution, t: f64, ell: u32, sign: Sign, r: (f64, f64), n: usize, rho_c: f64) -> Result<ModeVector> {
    let op = assemble_mode(sol, t, ell, sign, r, n)?;
    let layout = op.layout.clone();
    let w = layout.width();
    let mut rhs = ModeVector::zeros(layout.clone());
    for (k, &rk) in layout.mesh().nodes().nodes().iter().enumerate() {
        let s = model_source(rho_of(t, rk), rho_c);
        for j in 0..w {
            rhs.dofs[k * w + j] = s * (1.0 + 0.25 * (j as f64 + 1.0).sin());
        }
    }
    Ok(op.green_solve(&rhs))
}

fn max_pairwise(curves: &[Vec<f64>], peak: f64) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            let d = curves[a].iter().zip(&curves[b]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(d / peak);
        }
    }
    worst
}

/// `t = 2^j` for `j ∈ octaves`; the source is supported in `r ≤ c t^{-2/3}`.
///
/// `ξ_t` solves on the unit disk. The model part `u_t` solves the same
/// equation at the same `t` on the disk `r ≤ S t^{-2/3}` with
/// `S = 2^{2(j_max + extra)/3}`, which covers the unit disk for every `t`
/// in the sweep; it stands in for the whole-plane solution.
pub fn model_solution_scaling(
    sol: &PainleveSolution,
    ell: u32,
    sign: Sign,
    octaves: &[u32],
    c: f64,
    grid: ModelGrid,
    extra: u32,
) -> Result<ModelScaling> {
    if octaves.len() < 2 || !(c > 0.0 && c < 1.0) {
        return param("model scaling needs two or more octaves and 0 < c < 1");
    }
    let rho_c = rho_of(1.0, c);
    let s_min = grid.s_min();
    let j_ref = octaves.iter().copied().max().unwrap_or(0) + extra;
    let n_ref = grid.nodes(j_ref);
    let s_big = (2.0f64).powf(2.0 * j_ref as f64 / 3.0);
    let pairs = octaves
        .par_iter()
        .map(|&j| {
            let t = (2.0f64).powi(j as i32);
            let sc = t.powf(-2.0 / 3.0);
            let model = model_solve(sol, t, ell, sign, (s_min * sc, s_big * sc), n_ref, rho_c)?;
            let xi = model_solve(sol, t, ell, sign, (s_min * sc, 1.0), grid.nodes(j), rho_c)?;
            Ok((model, xi))
        })
        .collect::<Result<Vec<(ModeVector, ModeVector)>>>()?;
    let w = pairs[0].0.layout.width();
    let ts: Vec<f64> = octaves.iter().map(|&j| (2.0f64).powi(j as i32)).collect();
    let lift = |x: &ModeVector, t: f64, len: usize| -> Vec<f64> { x.dofs[..len].iter().map(|v| v * t.powf(4.0 / 3.0)).collect() };
    let models: Vec<Vec<f64>> = pairs.iter().zip(&ts).map(|((u, _), &t)| lift(u, t, u.dofs.len())).collect();
    let sols: Vec<Vec<f64>> = pairs.iter().zip(&ts).map(|((_, x), &t)| lift(x, t, grid.nodes(0) * w)).collect();
    let peak = models.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut remainder_norms = Vec::new();
    for (u, x) in &pairs {
        let m = x.layout.mass();
        let sq: f64 = x.dofs.iter().zip(&u.dofs).zip(&m).map(|((v, u), mk)| mk * (v - u).powi(2)).sum();
        remainder_norms.push(sq.sqrt());
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = remainder_norms.iter().map(|v| v.ln()).collect();
    let (remainder_slope, _) = fit_line(&lx, &ly);
    Ok(ModelScaling {
        ts,
        collapse: max_pairwise(&models, peak),
        solution_collapse: max_pairwise(&sols, peak),
        remainder_norms,
        remainder_slope,
        peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painleve::default_solution;

    #[test]
    fn eigenvalues_scale_like_t_to_four_thirds() {
        let rep = eigen_scaling(default_solution(), 1, Sign::Plus, &[1.0, 2.0, 4.0, 8.0], 1.0, 1e-3, 120).unwrap();
        assert!((rep.exponent - 4.0 / 3.0).abs() < 0.05, "{rep:?}");
        assert!(rep.rescaled_spread < 1e-4, "{rep:?}");
    }

    #[test]
    fn unit_disk_eigenvalue_matches_the_frozen_value() {
        let fine = assemble_mode(default_solution(), 1.0, 0, Sign::Plus, (1e-3, 1.0), 597).unwrap();
        assert!((fine.smallest_eigenvalue().unwrap() / UNIT_DISK_LAMBDA - 1.0).abs() < 1e-9);
        let coarse = assemble_mode(default_solution(), 1.0, 0, Sign::Plus, (1e-3, 1.0), 150).unwrap();
        assert!((coarse.smallest_eigenvalue().unwrap() / UNIT_DISK_LAMBDA - 1.0).abs() < 1e-3);
    }

    #[test]
    fn unit_disk_blocks_are_positive_definite() {
        for ell in 0..=6 {
            for sign in [Sign::Plus, Sign::Minus] {
                if ell == 0 && sign == Sign::Minus {
                    continue;
                }
                let op = assemble_mode(default_solution(), 1.0, ell, sign, (1e-3, 1.0), 80).unwrap();
                assert!(op.smallest_eigenvalue().unwrap() > 1e-3, "{ell} {sign:?}");
            }
        }
    }

    #[test]
    fn model_solutions_collapse_and_remainders_shrink() {
        let grid = ModelGrid { inner_steps: 120, per_octave: 12 };
        let rep = model_solution_scaling(default_solution(), 0, Sign::Plus, &[0, 1, 2, 3], 0.25, grid, 2).unwrap();
        assert!(rep.collapse < 0.05, "{rep:?}");
        assert!(rep.remainder_slope <= -5.0 / 3.0 + 0.15, "{rep:?}");
    }

    #[test]
    fn inverse_lambda_is_bounded_in_t() {
        let rep = green_uniformity(default_solution(), &[1.0, 4.0, 16.0], 3, 1e-3, 120).unwrap();
        assert!(rep.ratio() < 3.0, "{rep:?}");
        assert!(rep.inverse_lambda.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
