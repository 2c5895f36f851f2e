//! Fiducial solution on the unit disk with `q = -z dz²`:
//! `h_t(r) = ψ((8/3) t r^{3/2})`, `f_t = 1/8 + r h_t'/4`.

use std::sync::Arc;

use crate::error::{param, Result};
use crate::field::{EquivariantField, Form, Key, Profile, Slot};
use crate::grid::RadialGrid;
use crate::painleve::PainleveSolution;

#[derive(Debug, Clone)]
pub struct FiducialData {
    pub t: f64,
    pub grid: Arc<RadialGrid>,
    pub h: Vec<f64>,
    pub h_prime: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    /// `h''` from the ODE, used for exact jets.
    h_second: Vec<f64>,
    /// Painlevé solution the profiles were sampled from (`None` for the limit).
    source: Option<Arc<PainleveSolution>>,
}

pub fn rho_of(t: f64, r: f64) -> f64 {
    8.0 / 3.0 * t * r.powf(1.5)
}

/// Inverse of [`rho_of`].
pub fn r_of(t: f64, rho: f64) -> f64 {
    (3.0 * rho / (8.0 * t)).powf(2.0 / 3.0)
}

pub fn build_fiducial(sol: &PainleveSolution, t: f64, grid: Arc<RadialGrid>) -> Result<FiducialData> {
    if !(t.is_finite() && t >= 1.0) {
        return param(format!("fiducial data needs finite t >= 1, got {t}"));
    }
    let n = grid.len();
    let (mut h, mut hp, mut hpp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (k, &r) in grid.nodes().iter().enumerate() {
        let rho = rho_of(t, r);
        let (psi, dpsi, _) = sol.eval_jets(rho);
        if !psi.is_finite() || !dpsi.is_finite() {
            return param(format!("Painlevé evaluation failed at rho = {rho}"));
        }
        h[k] = psi;
        hp[k] = dpsi * 4.0 * t * r.sqrt();
        // (r d/dr)² h = r h' + r² h'' = 8 t² r³ sinh 2h
        hpp[k] = (8.0 * t * t * r.powi(3) * (2.0 * psi).sinh() - r * hp[k]) / (r * r);
    }
    let f: Vec<f64> = grid.nodes().iter().zip(&hp).map(|(r, d)| 0.125 + 0.25 * r * d).collect();
    let f_prime = grid.differentiate(&f)?;
    Ok(FiducialData { t, grid, h, h_prime: hp, f, f_prime, h_second: hpp, source: Some(Arc::new(sol.clone())) })
}

impl FiducialData {
    /// `t → ∞` profile (`h ≡ 0`, `f ≡ 1/8`) with the coupling `t` kept.
    pub fn limiting(t: f64, grid: Arc<RadialGrid>) -> FiducialData {
        let n = grid.len();
        FiducialData {
            t,
            grid,
            h: vec![0.0; n],
            h_prime: vec![0.0; n],
            f: vec![0.125; n],
            f_prime: vec![0.0; n],
            h_second: vec![0.0; n],
            source: None,
        }
    }

    /// Same `t` and source sampled on another grid.
    pub fn on_grid(&self, grid: Arc<RadialGrid>) -> Result<FiducialData> {
        match &self.source {
            Some(sol) => build_fiducial(sol, self.t, grid),
            None => Ok(FiducialData::limiting(self.t, grid)),
        }
    }

    pub fn is_limiting(&self) -> bool {
        self.source.is_none()
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// `h` with jets `(h, h', h'')`.
    pub fn h_jets(&self) -> Profile {
        Profile::with_jets(vec![real(&self.h), real(&self.h_prime), real(&self.h_second)])
    }

    /// `f` with jets; `f' = 2t²r² sinh 2h` exactly.
    pub fn f_jets(&self) -> Profile {
        let t2 = self.t * self.t;
        let r = self.nodes();
        let fp: Vec<f64> = (0..r.len()).map(|k| 2.0 * t2 * r[k] * r[k] * (2.0 * self.h[k]).sinh()).collect();
        let fpp: Vec<f64> = (0..r.len())
            .map(|k| {
                let s = 2.0 * self.h[k];
                4.0 * t2 * r[k] * s.sinh() + 4.0 * t2 * r[k] * r[k] * s.cosh() * self.h_prime[k]
            })
            .collect();
        Profile::with_jets(vec![real(&self.f), real(&fp), real(&fpp)])
    }

    /// `r^{1/2} e^{s h}` with jets.
    pub fn sqrt_r_exp_h(&self, s: f64) -> Profile {
        let r = self.nodes();
        let mut lv = [vec![], vec![], vec![]];
        for k in 0..r.len() {
            let g = s * self.h[k];
            let gp = s * self.h_prime[k];
            let gpp = s * self.h_second[k];
            let v = r[k].sqrt() * g.exp();
            // d/dr: v (1/(2r) + g'), d²/dr²: v ((1/(2r) + g')² - 1/(2r²) + g'')
            let a = 0.5 / r[k] + gp;
            lv[0].push(v);
            lv[1].push(v * a);
            lv[2].push(v * (a * a - 0.5 / (r[k] * r[k]) + gpp));
        }
        Profile::with_jets(lv.iter().map(|l| real(l)).collect())
    }

    /// `(connection A, Higgs field Φ)` of the fiducial pair, exact jets.
    ///
    /// `Φ = r^{1/2} [[0, e^{-h} e^{iθ}], [e^{h}, 0]] dz` so `det Φ = -z dz²`.
    /// `A = 4 f Im ∂̄ log r ⊗ diag(i, -i) = -2 f dθ ⊗ diag(i, -i)`, which in the
    /// `dz, dz̄` basis is `(f/r)(-e^{-iθ} dz + e^{iθ} dz̄)` on the `(1,1)` slot.
    pub fn fields(&self) -> (EquivariantField, EquivariantField) {
        let g = self.grid.clone();
        let f_over_r = self.f_jets().mul(&Profile::rpow(&g, -1.0, 3));
        let neg = f_over_r.scale(crate::field::c(-1.0, 0.0));
        let mut a = EquivariantField::zero(g.clone());
        a.add_term(Key::new(Slot::S11, Form::Dz, -1), neg.clone());
        a.add_term(Key::new(Slot::S11, Form::Dzbar, 1), f_over_r.clone());
        a.add_term(Key::new(Slot::S22, Form::Dz, -1), f_over_r.clone());
        a.add_term(Key::new(Slot::S22, Form::Dzbar, 1), neg);
        let mut phi = EquivariantField::zero(g);
        phi.add_term(Key::new(Slot::S12, Form::Dz, 1), self.sqrt_r_exp_h(-1.0));
        phi.add_term(Key::new(Slot::S21, Form::Dz, 0), self.sqrt_r_exp_h(1.0));
        (a, phi)
    }
}

fn real(v: &[f64]) -> Vec<crate::C64> {
    v.iter().map(|x| crate::C64::new(*x, 0.0)).collect()
}

pub fn fiducial_fields(fd: &FiducialData) -> (EquivariantField, EquivariantField) {
    fd.fields()
}

/// Measured constants for one `t` of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub t: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub f_monotone_r: bool,
    pub h_positive_decreasing: bool,
    /// `sup_{r ≥ r0} |f_t - 1/8|`
    pub f_dist_far: f64,
    pub sup_f_over_r_scaled: f64,
    pub sup_f_over_r2_scaled: f64,
    /// fitted `C` in `|h_t| ≤ C e^{-ρ} / (t r^{3/2})^{1/2}` on `r ≥ r0`
    pub decay_constant: f64,
    /// `h_t + ½ log r` at the innermost node
    pub b0: f64,
    pub sup_plus: f64,
    pub sup_minus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    pub clause_i: bool,
    pub clause_ii: bool,
    pub clause_iii: bool,
    pub clause_iv: bool,
    pub clause_v: bool,
    /// max/min - 1 of the scaled `r^{-2} f_t` sup across the sweep
    pub iii_variation: f64,
    pub v_variation: f64,
}

impl BoundsReport {
    pub fn all_ok(&self) -> bool {
        self.clause_i && self.clause_ii && self.clause_iii && self.clause_iv && self.clause_v
    }
}

/// Radius beyond which clauses (ii) and (iv) are measured.
pub const BOUNDS_R0: f64 = 0.5;
/// Allowed relative spread of the scaled constants across the sweep.
pub const BOUNDS_SPREAD: f64 = 0.2;

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min - 1.0
}

/// Check the properties of `f_t`, `h_t` over a sweep of fiducial data built
/// on one common grid, ordered by increasing `t`.
pub fn check_fiducial_bounds(sweep: &[FiducialData]) -> Result<BoundsReport> {
    if sweep.is_empty() {
        return param("empty t sweep");
    }
    if sweep.windows(2).any(|w| w[1].t <= w[0].t) {
        return param("t sweep must be increasing");
    }
    let n = sweep[0].grid.len();
    if sweep.iter().any(|fd| fd.grid.nodes() != sweep[0].grid.nodes()) {
        return param("all fiducial data must share one grid");
    }
    let tol = 1e-9;
    let mut rows = Vec::new();
    for fd in sweep {
        let r = fd.nodes();
        let t = fd.t;
        let f_min = fd.f.iter().cloned().fold(f64::MAX, f64::min);
        let f_max = fd.f.iter().cloned().fold(f64::MIN, f64::max);
        let f_monotone_r = fd.f.windows(2).all(|w| w[1] >= w[0] - tol);
        let h_positive_decreasing = fd.h.iter().all(|h| *h > 0.0) && fd.h.windows(2).all(|w| w[1] < w[0]);
        let far = (0..n).filter(|k| r[*k] >= BOUNDS_R0);
        let f_dist_far = far.clone().map(|k| (fd.f[k] - 0.125).abs()).fold(0.0, f64::max);
        let sup1 = (0..n).map(|k| fd.f[k] / r[k]).fold(0.0, f64::max) / t.powf(2.0 / 3.0);
        let sup2 = (0..n).map(|k| fd.f[k] / (r[k] * r[k])).fold(0.0, f64::max) / t.powf(4.0 / 3.0);
        let decay_constant = far
            .map(|k| {
                let rho = rho_of(t, r[k]);
                fd.h[k].abs() * (t * r[k].powf(1.5)).sqrt() * rho.exp()
            })
            .fold(0.0, f64::max);
        let b0 = fd.h[0] + 0.5 * r[0].ln();
        let inside = (0..n).filter(|k| r[*k] < 1.0 + 1e-12);
        let sup_plus = inside.clone().map(|k| r[k].sqrt() * fd.h[k].exp()).fold(0.0, f64::max);
        let sup_minus = inside.map(|k| r[k].sqrt() * (-fd.h[k]).exp()).fold(0.0, f64::max);
        rows.push(BoundsRow {
            t,
            f_min,
            f_max,
            f_monotone_r,
            h_positive_decreasing,
            f_dist_far,
            sup_f_over_r_scaled: sup1,
            sup_f_over_r2_scaled: sup2,
            decay_constant,
            b0,
            sup_plus,
            sup_minus,
        });
    }
    let clause_i = rows.iter().all(|w| w.f_min >= -tol && w.f_max <= 0.125 + tol && w.f_monotone_r);
    let monotone_t = sweep.windows(2).all(|w| w[0].f.iter().zip(&w[1].f).all(|(a, b)| *b >= a - tol));
    let dist_shrinks = rows.windows(2).all(|w| w[1].f_dist_far <= w[0].f_dist_far + tol);
    let clause_ii = monotone_t && dist_shrinks;
    let iii: Vec<f64> = rows.iter().map(|w| w.sup_f_over_r2_scaled).collect();
    let iii_first: Vec<f64> = rows.iter().map(|w| w.sup_f_over_r_scaled).collect();
    let iii_variation = spread(&iii);
    let clause_iii = iii_variation < BOUNDS_SPREAD && iii_first.iter().all(|v| v.is_finite());
    let clause_iv = rows.iter().all(|w| w.decay_constant.is_finite() && w.h_positive_decreasing);
    let plus: Vec<f64> = rows.iter().map(|w| w.sup_plus).collect();
    let minus: Vec<f64> = rows.iter().map(|w| w.sup_minus).collect();
    let v_variation = spread(&plus).max(spread(&minus));
    let clause_v = v_variation < BOUNDS_SPREAD;
    Ok(BoundsReport { rows, clause_i, clause_ii, clause_iii, clause_iv, clause_v, iii_variation, v_variation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FormAlgebra;
    use crate::grid::make_log_grid;
    use crate::painleve::default_solution;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(make_log_grid(1e-4, 1.0, 400).unwrap())
    }

    #[test]
    fn limits_at_both_ends() {
        let g = Arc::new(make_log_grid(1e-6, 2.0, 500).unwrap());
        let fd = build_fiducial(default_solution(), 8.0, g).unwrap();
        let last = fd.f.len() - 1;
        assert!((fd.f[last] - 0.125).abs() < 1e-3);
        // double zero at the origin
        assert!(fd.f[0] / fd.nodes()[0].powi(2) < 10.0);
        // h + ½ log r is flat where ρ is small
        let b = |k: usize| fd.h[k] + 0.5 * fd.nodes()[k].ln();
        assert!((b(0) - b(20)).abs() < 1e-3);
    }

    #[test]
    fn f_formula_agrees_with_differentiated_h() {
        let fd = build_fiducial(default_solution(), 4.0, grid()).unwrap();
        let hp = fd.grid.differentiate(&fd.h).unwrap();
        for k in 5..fd.h.len() - 5 {
            let alt = 0.125 + 0.25 * fd.nodes()[k] * hp[k];
            assert!((alt - fd.f[k]).abs() < 2e-3, "k={k}");
        }
    }

    #[test]
    fn higgs_determinant_is_minus_z() {
        let fd = build_fiducial(default_solution(), 2.0, grid()).unwrap();
        let (_, phi) = fd.fields();
        let up = phi.get(&Key::new(Slot::S12, Form::Dz, 1)).unwrap();
        let lo = phi.get(&Key::new(Slot::S21, Form::Dz, 0)).unwrap();
        for (k, r) in fd.nodes().iter().enumerate() {
            // det = -(up e^{iθ})(lo) = -r e^{iθ} = -z
            assert!(((up.values()[k] * lo.values()[k]).re - r).abs() < 1e-12 * r.max(1.0));
        }
    }

    #[test]
    fn fiducial_pair_solves_self_duality() {
        let fd = build_fiducial(default_solution(), 4.0, grid()).unwrap();
        let (a, phi) = fd.fields();
        let t = fd.t;
        // F_A + t²[Φ∧Φ*] and ∂̄_A Φ
        let curv = a.d().add(&a.wedge(&a)).add(&phi.bracket(&phi.adjoint()).scale(crate::field::c(t * t, 0.0)));
        let dbar = phi.delbar().add(&a.part01().bracket(&phi));
        let scale = phi.bracket(&phi.adjoint()).scale(crate::field::c(t * t, 0.0)).max_abs();
        assert!(curv.max_abs() < 1e-6 * scale, "{} vs {scale}", curv.max_abs());
        assert!(dbar.max_abs() < 1e-9);
    }

    #[test]
    fn fiducial_bounds_sweep() {
        let g = Arc::new(make_log_grid(1e-5, 1.0, 600).unwrap());
        let sweep: Vec<_> =
            [1.0, 2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|t| build_fiducial(default_solution(), *t, g.clone()).unwrap()).collect();
        let rep = check_fiducial_bounds(&sweep).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
        // frozen baseline for clause (v) at t = 1
        assert!((rep.rows[0].sup_plus - SUP_PLUS_T1).abs() < 1e-8, "{}", rep.rows[0].sup_plus);
    }

    /// `r^{1/2} e^{h_1}` at `r = 1` (it is increasing in `r` because `f ≥ 0`),
    /// i.e. `e^{ψ(8/3)}` from an independent inward integration of the ODE
    /// seeded with `K0(12)/π`.
    const SUP_PLUS_T1: f64 = 1.0164377091719;

    #[test]
    fn parameter_errors() {
        assert!(build_fiducial(default_solution(), 0.5, grid()).is_err());
        assert!(check_fiducial_bounds(&[]).is_err());
    }
}
