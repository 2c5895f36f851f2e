//! Brute-force representation on a polar `(r, θ)` grid: every operation acts
//! pointwise on 2x2 matrices, angular derivatives are spectral. Used to
//! cross-check the mode algebra.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{c, EquivariantField, Form, FormAlgebra, Slot};
use crate::grid::RadialGrid;
use crate::C64;

#[derive(Debug, Clone)]
pub struct PolarField {
    grid: Arc<RadialGrid>,
    nt: usize,
    /// index `((form * nr + k) * nt + j) * 4 + slot`
    data: Vec<C64>,
}

impl PolarField {
    pub fn zero(grid: Arc<RadialGrid>, nt: usize) -> Self {
        let len = 4 * grid.len() * nt * 4;
        PolarField { grid, nt, data: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn from_equivariant(f: &EquivariantField, nt: usize) -> Self {
        let mut out = PolarField::zero(f.grid().clone(), nt);
        let nr = out.grid.len();
        for (key, p) in f.terms() {
            for j in 0..nt {
                let e = C64::from_polar(1.0, key.n as f64 * out.theta(j));
                for k in 0..nr {
                    let i = out.idx(key.form, k, j, key.slot);
                    out.data[i] += p.values()[k] * e;
                }
            }
        }
        out
    }

    pub fn n_theta(&self) -> usize {
        self.nt
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.nt as f64
    }

    fn idx(&self, form: Form, k: usize, j: usize, slot: Slot) -> usize {
        ((form.index() * self.grid.len() + k) * self.nt + j) * 4 + slot.index()
    }

    pub fn get(&self, form: Form, k: usize, j: usize, slot: Slot) -> C64 {
        self.data[self.idx(form, k, j, slot)]
    }

    /// Max pointwise deviation over nodes `k` with `keep(k)`.
    pub fn max_diff(&self, o: &PolarField, keep: impl Fn(usize) -> bool) -> f64 {
        let nr = self.grid.len();
        let block = self.nt * 4;
        let mut m: f64 = 0.0;
        for f in 0..4 {
            for k in (0..nr).filter(|k| keep(*k)) {
                let s = (f * nr + k) * block;
                for i in s..s + block {
                    m = m.max((self.data[i] - o.data[i]).norm());
                }
            }
        }
        m
    }

    /// Scalar function (`Function` form, `S11` slot) from values indexed
    /// `k * nt + j`.
    pub fn from_scalar(grid: Arc<RadialGrid>, nt: usize, vals: &[f64]) -> Self {
        let mut out = PolarField::zero(grid, nt);
        for (i, v) in vals.iter().enumerate() {
            let (k, j) = (i / nt, i % nt);
            let idx = out.idx(Form::Function, k, j, Slot::S11);
            out.data[idx] = C64::new(*v, 0.0);
        }
        out
    }

    /// Pointwise `|x|²` (all forms and slots, with the form norms), indexed
    /// `k * nt + j`.
    pub fn pointwise_norm_sq(&self) -> Vec<f64> {
        let (nr, nt) = (self.grid.len(), self.nt);
        let mut out = vec![0.0; nr * nt];
        for form in Form::ALL {
            let w = form.norm_sq();
            for k in 0..nr {
                for j in 0..nt {
                    for s in Slot::ALL {
                        out[k * nt + j] += w * self.get(form, k, j, s).norm_sqr();
                    }
                }
            }
        }
        out
    }

    /// Pointwise real part of `⟨x, y⟩`, indexed `k * nt + j`.
    pub fn pointwise_inner(&self, o: &PolarField) -> Vec<f64> {
        let (nr, nt) = (self.grid.len(), self.nt);
        let mut out = vec![0.0; nr * nt];
        for form in Form::ALL {
            let w = form.norm_sq();
            for k in 0..nr {
                for j in 0..nt {
                    for s in Slot::ALL {
                        out[k * nt + j] += w * (self.get(form, k, j, s) * o.get(form, k, j, s).conj()).re;
                    }
                }
            }
        }
        out
    }

    /// Flat Laplacian `4∂_z∂_z̄` of a scalar field, indexed `k * nt + j`.
    pub fn scalar_laplacian(&self) -> Vec<f64> {
        let dd = self.delbar().del();
        let (nr, nt) = (self.grid.len(), self.nt);
        (0..nr * nt).map(|i| 4.0 * dd.get(Form::DzDzbar, i / nt, i % nt, Slot::S11).re).collect()
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Angular Fourier decomposition back into modes `|n| < nt/2`.
    pub fn angular_modes(&self) -> EquivariantField {
        let (nr, nt) = (self.grid.len(), self.nt);
        let half = (nt as i32 - 1) / 2;
        let mut out = EquivariantField::zero(self.grid.clone());
        for form in Form::ALL {
            for slot in Slot::ALL {
                for n in -half..=half {
                    let twiddle: Vec<C64> = (0..nt).map(|j| C64::from_polar(1.0 / nt as f64, -(n as f64) * self.theta(j))).collect();
                    let vals: Vec<C64> = (0..nr).map(|k| (0..nt).map(|j| self.get(form, k, j, slot) * twiddle[j]).sum()).collect();
                    if vals.iter().any(|v| v.norm() > 0.0) {
                        out.add_term(super::Key::new(slot, form, n), super::Profile::new(vals));
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn map2(&self, o: &PolarField, f: impl Fn(C64, C64) -> C64) -> PolarField {
        let data = self.data.iter().zip(&o.data).map(|(a, b)| f(*a, *b)).collect();
        PolarField { grid: self.grid.clone(), nt: self.nt, data }
    }

    /// `∂_z` (sign = -1) or `∂_z̄` (sign = +1) of the coefficient of `form`:
    /// `½ e^{∓iθ} (∂_r ± (i/r) ∂_θ)`.
    fn dcoef(&self, form: Form, sign: f64) -> Vec<C64> {
        let nr = self.grid.len();
        let nt = self.nt;
        let mut out = vec![C64::new(0.0, 0.0); nr * nt * 4];
        let base = form.index() * nr * nt * 4;
        // radial derivative along each (θ, slot) line
        let mut line = vec![C64::new(0.0, 0.0); nr];
        for j in 0..nt {
            for s in 0..4 {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = self.data[base + (k * nt + j) * 4 + s];
                }
                let d = self.grid.apply_stencil(&line);
                for k in 0..nr {
                    out[(k * nt + j) * 4 + s] = d[k];
                }
            }
        }
        // angular derivative on each ring
        let modes: Vec<i64> = (0..nt as i64).map(|m| if m <= nt as i64 / 2 { m } else { m - nt as i64 }).collect();
        let mut ring = vec![C64::new(0.0, 0.0); nt];
        for k in 0..nr {
            let r = self.grid.nodes()[k];
            for s in 0..4 {
                for (j, v) in ring.iter_mut().enumerate() {
                    *v = self.data[base + (k * nt + j) * 4 + s];
                }
                let mut coef = vec![C64::new(0.0, 0.0); nt];
                for (mi, m) in modes.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, v) in ring.iter().enumerate() {
                        acc += v * C64::from_polar(1.0, -(*m as f64) * self.theta(j));
                    }
                    // drop the unresolved Nyquist mode
                    coef[mi] = if nt.is_multiple_of(2) && *m == nt as i64 / 2 { C64::new(0.0, 0.0) } else { acc / nt as f64 };
                }
                for j in 0..nt {
                    let mut dth = C64::new(0.0, 0.0);
                    for (mi, m) in modes.iter().enumerate() {
                        dth += coef[mi] * c(0.0, *m as f64) * C64::from_polar(1.0, *m as f64 * self.theta(j));
                    }
                    let i = (k * nt + j) * 4 + s;
                    let e = C64::from_polar(0.5, sign * self.theta(j));
                    out[i] = e * (out[i] + c(0.0, sign / r) * dth);
                }
            }
        }
        out
    }

    fn put(&mut self, form: Form, vals: &[C64], factor: C64) {
        let n = vals.len();
        let base = form.index() * n;
        for (i, v) in vals.iter().enumerate() {
            self.data[base + i] += v * factor;
        }
    }
}

impl FormAlgebra for PolarField {
    fn add(&self, o: &Self) -> Self {
        self.map2(o, |a, b| a + b)
    }

    fn scale(&self, s: C64) -> Self {
        PolarField { grid: self.grid.clone(), nt: self.nt, data: self.data.iter().map(|v| v * s).collect() }
    }

    fn wedge(&self, o: &Self) -> Self {
        let mut out = self.zero_like();
        let nr = self.grid.len();
        for fa in Form::ALL {
            for fb in Form::ALL {
                let Some((form, sign)) = Form::wedge(fa, fb) else { continue };
                for k in 0..nr {
                    for j in 0..self.nt {
                        for row in 0..2 {
                            for col in 0..2 {
                                let mut acc = C64::new(0.0, 0.0);
                                for m in 0..2 {
                                    acc += self.get(fa, k, j, Slot::from_rc(row, m)) * o.get(fb, k, j, Slot::from_rc(m, col));
                                }
                                let i = out.idx(form, k, j, Slot::from_rc(row, col));
                                out.data[i] += acc * sign;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn adjoint(&self) -> Self {
        let mut out = self.zero_like();
        for f in Form::ALL {
            let (g, sign) = f.conj();
            for k in 0..self.grid.len() {
                for j in 0..self.nt {
                    for s in Slot::ALL {
                        let i = out.idx(g, k, j, s.transpose());
                        out.data[i] += self.get(f, k, j, s).conj() * sign;
                    }
                }
            }
        }
        out
    }

    fn star(&self) -> Self {
        let mut out = self.zero_like();
        let block = self.grid.len() * self.nt * 4;
        for f in Form::ALL {
            let (g, s) = f.star();
            let src = &self.data[f.index() * block..(f.index() + 1) * block];
            out.put(g, src, s);
        }
        out
    }

    fn del(&self) -> Self {
        let mut out = self.zero_like();
        out.put(Form::Dz, &self.dcoef(Form::Function, -1.0), c(1.0, 0.0));
        out.put(Form::DzDzbar, &self.dcoef(Form::Dzbar, -1.0), c(1.0, 0.0));
        out
    }

    fn delbar(&self) -> Self {
        let mut out = self.zero_like();
        out.put(Form::Dzbar, &self.dcoef(Form::Function, 1.0), c(1.0, 0.0));
        out.put(Form::DzDzbar, &self.dcoef(Form::Dz, 1.0), c(-1.0, 0.0));
        out
    }

    fn form_part(&self, f: Form) -> Self {
        let mut out = self.zero_like();
        let block = self.grid.len() * self.nt * 4;
        let r = f.index() * block..(f.index() + 1) * block;
        out.data[r.clone()].copy_from_slice(&self.data[r]);
        out
    }

    fn zero_like(&self) -> Self {
        PolarField::zero(self.grid.clone(), self.nt)
    }
}
