//! Tangent vectors to the approximate Hitchin section induced by a variation
//! `q̇ = ḟ dz²` of the quadratic differential, and their Coulomb gauge.
//!
//! With `f = -z` the base Higgs field is `Φ(f) = [[0, -e^{-h}|f|^{-1/2} f],
//! [e^{h}|f|^{1/2}, 0]] dz` (so `det Φ = f dz²`) and
//! `A(f) = -2F(|f|) Im(df/f) ⊗ diag(i, -i)`, with `h = h_t(|f|)` and
//! `F = f_t(|f|)`. The variation is taken at fixed `t`. Writing `w = ḟ/f`
//! and `R = 1/2 + r h' = 4F`:
//!
//! - `Φ̇ = [[0, -e^{-h} r^{-1/2}(ḟ - R f Re w)], [e^{h} r^{1/2} R Re w, 0]] dz`
//! - `Ȧ = (-2F' r Re w dθ - 2F d Im w) ⊗ diag(i, -i)`
//! - `γ = -2F Im w ⊗ diag(i, -i)`
//!
//! and `(α, tφ) = (Ȧ, tΦ̇) - i(γ)` has the closed form
//! `φ = [[0, -(1 - 4F) e^{-h} r^{-1/2} ḟ], [4F e^{h} r^{1/2} w, 0]] dz`,
//! `α = (F'/r)(ḟ̄ dz - ḟ dz̄) ⊗ diag(1, -1)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param, Result};
use crate::fiducial::{build_fiducial, FiducialData};
use crate::field::{c, EquivariantField, FormAlgebra, Form, Key, Profile, Slot, I, ONE};
use crate::grid::{make_log_grid, RadialGrid};
use crate::operators::Background;
use crate::painleve::PainleveSolution;
use crate::spectral::{apply_b, fit_line, pair_image, Degree, Mesh, MeshBackground, RadialOperatorMatrix, SectorLayout};
use crate::C64;

/// `ḟ(z) = Σ c_k z^k` on the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct HolQuadDiff {
    pub coeffs: Vec<C64>,
}

impl HolQuadDiff {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return param("quadratic differential coefficients must be finite");
        }
        Ok(HolQuadDiff { coeffs })
    }

    pub fn real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&v| c(v, 0.0)).collect())
    }

    /// Highest index with a nonzero coefficient (0 for `ḟ ≡ 0`).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() > 0.0).unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        HolQuadDiff { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `ḟ(0)`.
    pub fn at_zero(&self) -> C64 {
        self.coeffs.first().copied().unwrap_or_default()
    }
}

/// `(α, φ)` at `(A, tΦ)`. When `normalized` the stored pair is
/// `(t^{-1}α, φ)`, otherwise `(α, tφ)`; the two differ by the factor `t`.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub alpha: EquivariantField,
    pub phi: EquivariantField,
    pub t: f64,
    pub normalized: bool,
}

impl TangentVector {
    pub fn zero(grid: Arc<RadialGrid>, t: f64, normalized: bool) -> Self {
        TangentVector { alpha: EquivariantField::zero(grid.clone()), phi: EquivariantField::zero(grid), t, normalized }
    }

    pub fn scale(&self, s: f64) -> Self {
        TangentVector { alpha: self.alpha.scale(c(s, 0.0)), phi: self.phi.scale(c(s, 0.0)), ..self.clone() }
    }

    /// The normalized representative.
    pub fn normalize(&self) -> Self {
        if self.normalized {
            self.clone()
        } else {
            TangentVector { normalized: true, ..self.scale(1.0 / self.t) }
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let o = if o.normalized == self.normalized { o.clone() } else if self.normalized { o.normalize() } else { o.scale(o.t) };
        TangentVector { alpha: self.alpha.sub(&o.alpha), phi: self.phi.sub(&o.phi), ..self.clone() }
    }

    pub fn inner(&self, o: &Self) -> f64 {
        self.alpha.inner(&o.alpha) + self.phi.inner(&o.phi)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.alpha.grid()
    }
}

/// Angular-mode expansion of a scalar function on the disk.
#[derive(Debug, Clone, Default)]
struct Modes(BTreeMap<i32, Profile>);

impl Modes {
    fn add(&mut self, n: i32, p: Profile) {
        match self.0.get_mut(&n) {
            Some(q) => q.add_assign(&p),
            None => {
                self.0.insert(n, p);
            }
        }
    }

    fn conj(&self) -> Modes {
        Modes(self.0.iter().map(|(n, p)| (-n, p.conj())).collect())
    }

    fn combine(&self, a: C64, o: &Modes, b: C64) -> Modes {
        let mut out = Modes::default();
        for (n, p) in &self.0 {
            out.add(*n, p.scale(a));
        }
        for (n, p) in &o.0 {
            out.add(*n, p.scale(b));
        }
        out
    }

    fn mul(&self, p: &Profile) -> Modes {
        Modes(self.0.iter().map(|(n, q)| (*n, q.mul(p))).collect())
    }

    /// Multiply by `e^{isθ}`.
    fn shift(&self, s: i32) -> Modes {
        Modes(self.0.iter().map(|(n, q)| (n + s, q.clone())).collect())
    }

    fn place(&self, out: &mut EquivariantField, slot: Slot, form: Form, coef: C64) {
        for (n, p) in &self.0 {
            out.add_term(Key::new(slot, form, *n), p.scale(coef));
        }
    }
}

/// Modes of `ḟ`, `ḟ̄` and `w = ḟ/f` with exact jets.
struct Variation {
    fdot: Modes,
    fdot_bar: Modes,
    w: Modes,
}

impl Variation {
    fn new(fdot: &HolQuadDiff, g: &RadialGrid) -> Variation {
        let (mut fd, mut w) = (Modes::default(), Modes::default());
        for (k, &ck) in fdot.coeffs.iter().enumerate() {
            if ck == C64::new(0.0, 0.0) {
                continue;
            }
            let k = k as i32;
            fd.add(k, Profile::rpow(g, k as f64, 3).scale(ck));
            // ḟ/f = -Σ c_k z^{k-1}
            w.add(k - 1, Profile::rpow(g, (k - 1) as f64, 3).scale(-ck));
        }
        Variation { fdot_bar: fd.conj(), fdot: fd, w }
    }

    fn re_w(&self) -> Modes {
        self.w.combine(c(0.5, 0.0), &self.w.conj(), c(0.5, 0.0))
    }

    fn im_w(&self) -> Modes {
        self.w.combine(c(0.0, -0.5), &self.w.conj(), c(0.0, 0.5))
    }
}

fn diag_function(g: &Arc<RadialGrid>, m: &Modes, d: [C64; 2]) -> EquivariantField {
    let mut out = EquivariantField::zero(g.clone());
    m.place(&mut out, Slot::S11, Form::Function, d[0]);
    m.place(&mut out, Slot::S22, Form::Function, d[1]);
    out
}

/// `m dθ` with `dθ = (e^{-iθ} dz - e^{iθ} dz̄) / (2ir)`, on the diagonal `d`.
fn diag_dtheta(g: &Arc<RadialGrid>, m: &Modes, d: [C64; 2]) -> EquivariantField {
    let inv = m.mul(&Profile::rpow(g, -1.0, 3));
    let mut out = EquivariantField::zero(g.clone());
    let half = c(0.0, -0.5);
    for (slot, di) in [(Slot::S11, d[0]), (Slot::S22, d[1])] {
        inv.shift(-1).place(&mut out, slot, Form::Dz, half * di);
        inv.shift(1).place(&mut out, slot, Form::Dzbar, -half * di);
    }
    out
}

fn sigma3_i() -> [C64; 2] {
    [I, -I]
}

/// `F` and `F'` with jets, `e^{-h} r^{-1/2}` and `e^{h} r^{1/2}`.
struct Profiles {
    f: Profile,
    fp: Profile,
    em_over: Profile,
    ep_sqrt: Profile,
}

impl Profiles {
    fn new(fd: &FiducialData) -> Profiles {
        let f = fd.f_jets();
        let fp = Profile::with_jets((1..f.depth()).map(|d| f.level(d).unwrap().to_vec()).collect());
        let em_over = fd.sqrt_r_exp_h(-1.0).mul(&Profile::rpow(&fd.grid, -1.0, 3));
        Profiles { f, fp, em_over, ep_sqrt: fd.sqrt_r_exp_h(1.0) }
    }
}

/// `(Ȧ, tΦ̇)` for the variation `ḟ` of `q = -z dz²` at fixed `t`.
pub fn raw_variation(fdot: &HolQuadDiff, fd: &FiducialData) -> TangentVector {
    let g = fd.grid.clone();
    let v = Variation::new(fdot, &g);
    let p = Profiles::new(fd);
    let r = Profile::rpow(&g, 1.0, 3);
    let big_r = p.f.scale(c(4.0, 0.0));
    // Ȧ = (-2F' r Re w dθ - 2F d Im w) ⊗ diag(i, -i)
    let first = diag_dtheta(&g, &v.re_w().mul(&p.fp).mul(&r), sigma3_i()).scale(c(-2.0, 0.0));
    let second = diag_function(&g, &v.im_w(), sigma3_i()).d().mul_profile(&p.f).scale(c(-2.0, 0.0));
    let alpha = first.add(&second);
    // f Re w = (ḟ + ḟ̄ e^{2iθ}) / 2
    let f_re_w = v.fdot.combine(c(0.5, 0.0), &v.fdot_bar.shift(2), c(0.5, 0.0));
    let ur = v.fdot.combine(ONE, &f_re_w.mul(&big_r), c(-1.0, 0.0)).mul(&p.em_over);
    let ll = v.re_w().mul(&big_r).mul(&p.ep_sqrt);
    let mut phi = EquivariantField::zero(g.clone());
    ur.place(&mut phi, Slot::S12, Form::Dz, c(-fd.t, 0.0));
    ll.place(&mut phi, Slot::S21, Form::Dz, c(fd.t, 0.0));
    TangentVector { alpha, phi, t: fd.t, normalized: false }
}

/// `γ = -2F Im(ḟ/f) ⊗ diag(i, -i)`.
pub fn gauge_term(fdot: &HolQuadDiff, fd: &FiducialData) -> EquivariantField {
    let v = Variation::new(fdot, &fd.grid);
    diag_function(&fd.grid, &v.im_w().mul(&fd.f_jets()), sigma3_i()).scale(c(-2.0, 0.0))
}

/// `(α, tφ) = (Ȧ, tΦ̇) - i(γ)` computed by subtraction.
pub fn corrected_by_subtraction(fdot: &HolQuadDiff, fd: &FiducialData) -> TangentVector {
    let raw = raw_variation(fdot, fd);
    let bg = Background::from_fiducial(fd);
    let (da, dp) = bg.i_op(&gauge_term(fdot, fd));
    TangentVector { alpha: raw.alpha.sub(&da), phi: raw.phi.sub(&dp), ..raw }
}

/// `(α, tφ)` from the closed forms.
pub fn corrected_tangent(fdot: &HolQuadDiff, fd: &FiducialData) -> TangentVector {
    let g = fd.grid.clone();
    let v = Variation::new(fdot, &g);
    let p = Profiles::new(fd);
    let one_minus = Profile::constant(g.len(), ONE, 3).add(&p.f.scale(c(-4.0, 0.0)));
    let mut phi = EquivariantField::zero(g.clone());
    v.fdot.mul(&one_minus).mul(&p.em_over).place(&mut phi, Slot::S12, Form::Dz, c(-fd.t, 0.0));
    v.w.mul(&p.f).mul(&p.ep_sqrt).place(&mut phi, Slot::S21, Form::Dz, c(4.0 * fd.t, 0.0));
    let fp_over_r = p.fp.mul(&Profile::rpow(&g, -1.0, 3));
    let mut alpha = EquivariantField::zero(g.clone());
    for (slot, s) in [(Slot::S11, 1.0), (Slot::S22, -1.0)] {
        v.fdot_bar.mul(&fp_over_r).place(&mut alpha, slot, Form::Dz, c(s, 0.0));
        v.fdot.mul(&fp_over_r).place(&mut alpha, slot, Form::Dzbar, c(-s, 0.0));
    }
    TangentVector { alpha, phi, t: fd.t, normalized: false }
}

/// `(0, φ_∞)` with `φ_∞ = [[0, -r^{-1/2} ḟ / 2], [r^{1/2} w / 2, 0]] dz`.
pub fn limiting_tangent(fdot: &HolQuadDiff, grid: Arc<RadialGrid>, t: f64) -> TangentVector {
    let v = Variation::new(fdot, &grid);
    let mut phi = EquivariantField::zero(grid.clone());
    v.fdot.mul(&Profile::rpow(&grid, -0.5, 3)).place(&mut phi, Slot::S12, Form::Dz, c(-0.5, 0.0));
    v.w.mul(&Profile::rpow(&grid, 0.5, 3)).place(&mut phi, Slot::S21, Form::Dz, c(0.5, 0.0));
    TangentVector { alpha: EquivariantField::zero(grid), phi, t, normalized: true }
}

/// `E = i*(v)` for the normalized representative of `v`: the
/// Coulomb-gauge defect `t^{-1} d_A*α + t Re[Φ*∧φ]`.
pub fn gauge_defect(v: &TangentVector, fd: &FiducialData) -> EquivariantField {
    let n = v.normalize();
    Background::from_fiducial(fd).i_star(&n.alpha, &n.phi)
}

/// `‖E‖_{L²}` of [`gauge_defect`] in strong form.
pub fn coulomb_residual(v: &TangentVector, fd: &FiducialData) -> f64 {
    gauge_defect(v, fd).norm()
}

/// Outcome of the final gauge correction.
#[derive(Debug, Clone)]
pub struct CoulombProjection {
    /// `X = v - i ξ`, normalized, on the quadrature grid.
    pub x: TangentVector,
    /// `‖i ξ‖_{L²}`.
    pub gauge_norm: f64,
    /// Discrete-adjoint norm of `i*` before and after the correction.
    pub residual_before: f64,
    pub residual_after: f64,
    /// Sectors (twice-charges) that carried a load.
    pub charges: Vec<u32>,
}

fn charges_of(v: &TangentVector) -> Vec<u32> {
    let mut q: Vec<u32> = v
        .alpha
        .keys()
        .map(|k| k.charge2(false).unsigned_abs())
        .chain(v.phi.keys().map(|k| k.charge2(true).unsigned_abs()))
        .collect();
    q.sort_unstable();
    q.dedup();
    q
}

/// Orthogonal projection of `v` (given on `bg`'s quadrature grid) onto the
/// complement of the image of `i`: solve `D⁰ξ = i*v` weakly per sector with
/// natural (Neumann) conditions at `r = 1`, return `v - iξ`.
pub fn coulomb_project(v: &TangentVector, bg: &MeshBackground) -> Result<CoulombProjection> {
    let n = v.normalize();
    if !Arc::ptr_eq(n.grid(), bg.mesh.quad()) && n.grid().nodes() != bg.mesh.quad().nodes() {
        return param("tangent vector must live on the quadrature grid of the mesh");
    }
    let charges = charges_of(&n);
    let parts = charges
        .par_iter()
        .map(|&q| -> Result<Option<(EquivariantField, EquivariantField, f64, f64)>> {
            let layout = Arc::new(SectorLayout::new(bg.mesh.clone(), Degree::Zero, q));
            if layout.width() == 0 {
                return Ok(None);
            }
            let b = pair_image(bg, &layout, &[&n.alpha, &n.phi]);
            if b.iter().all(|x| *x == 0.0) {
                return Ok(None);
            }
            let op = RadialOperatorMatrix::assemble(bg, layout.clone())?;
            let xi = op.solve_weak(&b);
            let (da, dp) = apply_b(&bg.quad, Degree::Zero, &layout.embed(&xi));
            let gx = op.layout.clone();
            let before = op.dual_norm(&b);
            let corr = pair_image(bg, &gx, &[&da, &dp]);
            let rest: Vec<f64> = b.iter().zip(&corr).map(|(a, c)| a - c).collect();
            Ok(Some((da, dp, before, op.dual_norm(&rest))))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = n.clone();
    let mut gauge = TangentVector::zero(n.grid().clone(), n.t, true);
    let (mut before, mut after) = (0.0f64, 0.0f64);
    let mut used = Vec::new();
    for (q, p) in charges.iter().zip(parts) {
        let Some((da, dp, b0, b1)) = p else { continue };
        used.push(*q);
        gauge.alpha = gauge.alpha.add(&da);
        gauge.phi = gauge.phi.add(&dp);
        before = before.hypot(b0);
        after = after.hypot(b1);
    }
    x = x.sub(&gauge);
    Ok(CoulombProjection { x, gauge_norm: gauge.norm(), residual_before: before, residual_after: after, charges: used })
}

/// Everything needed to build `X_t(q̇)` on the unit disk.
#[derive(Debug, Clone)]
pub struct InducedTangent {
    pub t: f64,
    pub mesh: Arc<Mesh>,
    pub bg: Arc<MeshBackground>,
    /// Fiducial data on the quadrature grid.
    pub fd: FiducialData,
    /// Corrected vector `(α_t, tφ_t)` before the final projection.
    pub corrected: TangentVector,
    pub projection: CoulombProjection,
}

/// Log grid on `[r_min, 1]` with `n` nodes.
pub fn unit_disk_mesh(r_min: f64, n: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(Mesh::new(Arc::new(make_log_grid(r_min, 1.0, n)?))?))
}

/// Background of the fiducial solution on a mesh, with the quadrature-grid data.
pub fn mesh_background(sol: &PainleveSolution, t: f64, mesh: &Arc<Mesh>) -> Result<(Arc<MeshBackground>, FiducialData)> {
    let fd = build_fiducial(sol, t, mesh.nodes().clone())?;
    let bg = Arc::new(MeshBackground::new(&fd, mesh.clone())?);
    let fq = fd.on_grid(mesh.quad().clone())?;
    Ok((bg, fq))
}

/// `X_t(q̇)`: corrected tangent followed by the Coulomb projection.
pub fn induced_tangent(sol: &PainleveSolution, fdot: &HolQuadDiff, t: f64, mesh: &Arc<Mesh>) -> Result<InducedTangent> {
    let (bg, fd) = mesh_background(sol, t, mesh)?;
    induced_on(fdot, bg, fd)
}

/// [`induced_tangent`] on a prepared background.
pub fn induced_on(fdot: &HolQuadDiff, bg: Arc<MeshBackground>, fd: FiducialData) -> Result<InducedTangent> {
    let corrected = corrected_tangent(fdot, &fd);
    let projection = coulomb_project(&corrected, &bg)?;
    Ok(InducedTangent { t: fd.t, mesh: bg.mesh.clone(), bg, fd, corrected, projection })
}

/// `‖X_t - (0, φ_∞)‖_{L²}` over a sweep in `t` and its log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub ts: Vec<f64>,
    pub distances: Vec<f64>,
    pub gauge_norms: Vec<f64>,
    /// `sup |E_t| / t`.
    pub defect_sup_over_t: Vec<f64>,
    pub slope: f64,
}

pub fn horizontal_convergence(sol: &PainleveSolution, fdot: &HolQuadDiff, ts: &[f64], r_min: f64, n: usize) -> Result<ConvergenceReport> {
    if ts.len() < 2 {
        return param("convergence sweep needs at least two values of t");
    }
    let mesh = unit_disk_mesh(r_min, n)?;
    let rows = ts
        .par_iter()
        .map(|&t| -> Result<(f64, f64, f64)> {
            let it = induced_tangent(sol, fdot, t, &mesh)?;
            let lim = limiting_tangent(fdot, mesh.quad().clone(), t);
            let e = gauge_defect(&it.corrected, &it.fd);
            Ok((it.projection.x.sub(&lim).norm(), it.projection.gauge_norm, e.sup_norm(16) / t))
        })
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let (slope, _) = fit_line(&lx, &ly);
    Ok(ConvergenceReport {
        ts: ts.to_vec(),
        distances,
        gauge_norms: rows.iter().map(|r| r.1).collect(),
        defect_sup_over_t: rows.iter().map(|r| r.2).collect(),
        slope,
    })
}

/// Largest off-diagonal profile of a function-valued field.
pub fn off_diagonal_size(e: &EquivariantField) -> f64 {
    e.filter(|k| matches!(k.slot, Slot::S12 | Slot::S21)).max_abs()
}
