//! The deformation complex at `(A, tΦ)`:
//! `Ω⁰(su) --i--> Ω¹(su) ⊕ Ω^{1,0}(sl) --L--> Ω²(su) ⊕ Ω²(sl)`,
//! its adjoints, and the derivative maps `P`, `Q` entering the curvature.
//!
//! Everything is written against [`FormAlgebra`] so the same code runs on the
//! mode representation and on the polar-grid oracle.

use crate::field::{c, EquivariantField, FormAlgebra, PolarField, I};

#[derive(Debug, Clone)]
pub struct Background<F> {
    pub t: f64,
    pub a: F,
    pub a10: F,
    pub a01: F,
    pub phi: F,
    pub phi_star: F,
}

fn half_i() -> crate::C64 {
    c(0.0, 0.5)
}

impl<F: FormAlgebra> Background<F> {
    pub fn new(t: f64, a: F, phi: F) -> Self {
        Background { t, a10: a.part10(), a01: a.part01(), phi_star: phi.adjoint(), a, phi }
    }

    fn tc(&self) -> crate::C64 {
        c(self.t, 0.0)
    }

    pub fn d_a(&self, x: &F) -> F {
        x.d().add(&self.a.bracket(x))
    }
    pub fn del_a(&self, x: &F) -> F {
        x.del().add(&self.a10.bracket(x))
    }
    pub fn delbar_a(&self, x: &F) -> F {
        x.delbar().add(&self.a01.bracket(x))
    }
    /// `d_A* = -∗ d_A ∗`
    pub fn d_a_star(&self, x: &F) -> F {
        self.d_a(&x.star()).star().scale(c(-1.0, 0.0))
    }
    /// `∂_A* = -∗ ∂̄_A ∗`
    pub fn del_a_star(&self, x: &F) -> F {
        self.delbar_a(&x.star()).star().scale(c(-1.0, 0.0))
    }
    /// `∂̄_A* = -∗ ∂_A ∗`
    pub fn delbar_a_star(&self, x: &F) -> F {
        self.del_a(&x.star()).star().scale(c(-1.0, 0.0))
    }

    /// `i(γ) = (d_A γ, [tΦ∧γ])`
    pub fn i_op(&self, g: &F) -> (F, F) {
        (self.d_a(g), self.phi.bracket(g).scale(self.tc()))
    }

    /// `i*(α, φ) = d_A*α + (i/2)∗[tΦ∧φ*] - (i/2)∗[tΦ*∧φ]`
    pub fn i_star(&self, alpha: &F, phi: &F) -> F {
        let b1 = self.phi.bracket(&phi.adjoint()).star();
        let b2 = self.phi_star.bracket(phi).star();
        self.d_a_star(alpha).add(&b1.sub(&b2).scale(half_i() * self.t))
    }

    /// `L(α, φ) = (d_Aα + t[φ∧Φ*] + t[Φ∧φ*], ∂̄_Aφ + t[α∧Φ])`
    pub fn l_op(&self, alpha: &F, phi: &F) -> (F, F) {
        let m = self.d_a(alpha).add(&phi.bracket(&self.phi_star).add(&self.phi.bracket(&phi.adjoint())).scale(self.tc()));
        let s = self.delbar_a(phi).add(&alpha.bracket(&self.phi).scale(self.tc()));
        (m, s)
    }

    /// `L*(μ, σ) = (d_A*μ + (i/2)t[Φ*∧∗σ] - (i/2)t[Φ∧∗σ*], ∂̄_A*σ - 2it[Φ∧∗μ])`
    pub fn l_star(&self, mu: &F, sigma: &F) -> (F, F) {
        let ss = sigma.star();
        let ssa = sigma.adjoint().star();
        let a = self
            .d_a_star(mu)
            .add(&self.phi_star.bracket(&ss).sub(&self.phi.bracket(&ssa)).scale(half_i() * self.t));
        let p = self.delbar_a_star(sigma).sub(&self.phi.bracket(&mu.star()).scale(I * (2.0 * self.t)));
        (a, p)
    }

    pub fn d0(&self, g: &F) -> F {
        let (a, p) = self.i_op(g);
        self.i_star(&a, &p)
    }

    pub fn d2(&self, mu: &F, sigma: &F) -> (F, F) {
        let (a, p) = self.l_star(mu, sigma);
        self.l_op(&a, &p)
    }
}

/// `P_{(α,φ)} γ = ([α∧γ], [φ∧γ])`
pub fn p_op<F: FormAlgebra>(v: (&F, &F), g: &F) -> (F, F) {
    (v.0.bracket(g), v.1.bracket(g))
}

/// `P*_{(α,φ)}(β, ψ) = ∗[∗α∧β] + (i/2)∗[φ∧ψ*] - (i/2)∗[φ*∧ψ]`
pub fn p_star<F: FormAlgebra>(v: (&F, &F), w: (&F, &F)) -> F {
    let first = v.0.star().bracket(w.0).star();
    let b1 = v.1.bracket(&w.1.adjoint()).star();
    let b2 = v.1.adjoint().bracket(w.1).star();
    first.add(&b1.sub(&b2).scale(half_i()))
}

/// `Q_{(α,φ)}(β, ψ) = ([α∧β] + [φ∧ψ*] + [φ*∧ψ], [α^{0,1}∧ψ] + [β^{0,1}∧φ])`
pub fn q_op<F: FormAlgebra>(v: (&F, &F), w: (&F, &F)) -> (F, F) {
    let m = v.0.bracket(w.0).add(&v.1.bracket(&w.1.adjoint())).add(&v.1.adjoint().bracket(w.1));
    let s = v.0.part01().bracket(w.1).add(&w.0.part01().bracket(v.1));
    (m, s)
}

impl Background<EquivariantField> {
    pub fn from_fiducial(fd: &crate::fiducial::FiducialData) -> Self {
        let (a, phi) = fd.fields();
        Background::new(fd.t, a, phi)
    }

    pub fn to_polar(&self, nt: usize) -> Background<PolarField> {
        Background::new(self.t, PolarField::from_equivariant(&self.a, nt), PolarField::from_equivariant(&self.phi, nt))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fiducial::build_fiducial;
    use crate::field::{Form, Key, Profile, Slot};
    use crate::grid::make_log_grid;
    use crate::painleve::default_solution;

    fn bg(t: f64, n: usize) -> Background<EquivariantField> {
        let g = Arc::new(make_log_grid(0.05, 1.0, n).unwrap());
        Background::from_fiducial(&build_fiducial(default_solution(), t, g).unwrap())
    }

    /// Smooth bump with exact jets, vanishing to high order at both ends of
    /// `[0.05, 1]` so that boundary terms drop out of integrations by parts.
    fn bump(g: &crate::grid::RadialGrid, shift: f64, z: crate::C64) -> Profile {
        let (a, b) = (0.05_f64, 1.0_f64);
        let p = Profile::from_fn(g, 3, |r| {
            let u = (r - a) * (b - r);
            let w = 1.0 + shift * r;
            // u^4 w and derivatives
            let du = (b - r) - (r - a);
            let ddu = -2.0;
            let v = u.powi(4) * w;
            let dv = 4.0 * u.powi(3) * du * w + u.powi(4) * shift;
            let ddv = 12.0 * u * u * du * du * w + 4.0 * u.powi(3) * ddu * w + 8.0 * u.powi(3) * du * shift;
            [v, dv, ddv]
        });
        p.scale(z * 100.0)
    }

    /// su-valued function with modes n = 0, 1
    fn gamma(g: &Arc<crate::grid::RadialGrid>) -> EquivariantField {
        let mut f = EquivariantField::zero(g.clone());
        let b = bump(g, 0.7, c(0.3, 0.4));
        f.add_term(Key::new(Slot::S12, Form::Function, 1), b.clone());
        f.add_term(Key::new(Slot::S21, Form::Function, -1), b.conj().scale(c(-1.0, 0.0)));
        let d = bump(g, -0.2, c(0.0, 0.8));
        f.add_term(Key::new(Slot::S11, Form::Function, 0), d.clone());
        f.add_term(Key::new(Slot::S22, Form::Function, 0), d.scale(c(-1.0, 0.0)));
        f
    }

    fn su_one_form(g: &Arc<crate::grid::RadialGrid>) -> EquivariantField {
        let mut a = EquivariantField::zero(g.clone());
        a.add_term(Key::new(Slot::S11, Form::Dzbar, 1), bump(g, 0.3, c(1.0, -0.5)));
        a.add_term(Key::new(Slot::S22, Form::Dzbar, 1), bump(g, 0.3, c(-1.0, 0.5)));
        a.add_term(Key::new(Slot::S12, Form::Dzbar, 2), bump(g, -0.4, c(0.2, 0.9)));
        a.add_term(Key::new(Slot::S21, Form::Dzbar, 0), bump(g, 0.1, c(-0.6, 0.1)));
        a.sub(&a.adjoint())
    }

    fn higgs_one_form(g: &Arc<crate::grid::RadialGrid>) -> EquivariantField {
        let mut p = EquivariantField::zero(g.clone());
        p.add_term(Key::new(Slot::S12, Form::Dz, 2), bump(g, 0.5, c(0.4, 0.1)));
        p.add_term(Key::new(Slot::S21, Form::Dz, 1), bump(g, -0.3, c(-0.2, 0.7)));
        p.add_term(Key::new(Slot::S11, Form::Dz, 0), bump(g, 0.2, c(0.5, 0.5)));
        p.add_term(Key::new(Slot::S22, Form::Dz, 0), bump(g, 0.2, c(-0.5, -0.5)));
        p
    }

    fn two_forms(g: &Arc<crate::grid::RadialGrid>) -> (EquivariantField, EquivariantField) {
        let mut m = EquivariantField::zero(g.clone());
        m.add_term(Key::new(Slot::S12, Form::DzDzbar, 1), bump(g, 0.1, c(0.3, -0.3)));
        m.add_term(Key::new(Slot::S21, Form::DzDzbar, -1), bump(g, 0.1, c(0.3, 0.3)));
        m.add_term(Key::new(Slot::S11, Form::DzDzbar, 0), bump(g, -0.6, c(0.7, 0.0)));
        m.add_term(Key::new(Slot::S22, Form::DzDzbar, 0), bump(g, -0.6, c(-0.7, 0.0)));
        let mut s = EquivariantField::zero(g.clone());
        s.add_term(Key::new(Slot::S12, Form::DzDzbar, 3), bump(g, 0.9, c(0.1, 0.2)));
        s.add_term(Key::new(Slot::S21, Form::DzDzbar, 2), bump(g, -0.9, c(0.4, -0.1)));
        s.add_term(Key::new(Slot::S11, Form::DzDzbar, 2), bump(g, 0.4, c(-0.3, 0.6)));
        s.add_term(Key::new(Slot::S22, Form::DzDzbar, 2), bump(g, 0.4, c(0.3, -0.6)));
        (m, s)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn linearised_action_is_annihilated_by_l() {
        let b = bg(4.0, 300);
        let g = gamma(&b.a.grid().clone());
        let (al, ph) = b.i_op(&g);
        let (m, s) = b.l_op(&al, &ph);
        let scale = al.max_abs() + ph.max_abs();
        assert!(m.max_abs() < 1e-6 * scale * b.t, "{} {}", m.max_abs(), scale);
        assert!(s.max_abs() < 1e-6 * scale * b.t, "{} {}", s.max_abs(), scale);
    }

    #[test]
    fn i_star_is_adjoint_of_i() {
        let b = bg(2.0, 300);
        let grid = b.a.grid().clone();
        let g = gamma(&grid);
        let (al, ph) = (su_one_form(&grid), higgs_one_form(&grid));
        let (ia, ip) = b.i_op(&g);
        let lhs = ia.inner(&al) + ip.inner(&ph);
        let rhs = g.inner(&b.i_star(&al, &ph));
        assert!(rel(lhs, rhs) < 1e-8, "{lhs} {rhs}");
    }

    #[test]
    fn l_star_is_adjoint_of_l() {
        let b = bg(2.0, 300);
        let grid = b.a.grid().clone();
        let (al, ph) = (su_one_form(&grid), higgs_one_form(&grid));
        let (mu, si) = two_forms(&grid);
        let (lm, ls) = b.l_op(&al, &ph);
        let (sa, sp) = b.l_star(&mu, &si);
        let lhs = lm.inner(&mu) + ls.inner(&si);
        let rhs = al.inner(&sa) + ph.inner(&sp);
        assert!(rel(lhs, rhs) < 1e-8, "{lhs} {rhs}");
    }

    #[test]
    fn p_star_is_adjoint_of_p() {
        let b = bg(2.0, 200);
        let grid = b.a.grid().clone();
        let g = gamma(&grid);
        let v = (su_one_form(&grid), higgs_one_form(&grid));
        let w = (su_one_form(&grid).scale(c(0.5, 0.0)).add(&v.0.star()), higgs_one_form(&grid).scale(c(0.0, 1.0)));
        let (pa, pp) = p_op((&v.0, &v.1), &g);
        let lhs = pa.inner(&w.0) + pp.inner(&w.1);
        let rhs = g.inner(&p_star((&v.0, &v.1), (&w.0, &w.1)));
        assert!(rel(lhs, rhs) < 1e-10, "{lhs} {rhs}");
    }

    #[test]
    fn diagonal_d0_has_displayed_potential() {
        let b = bg(3.0, 300);
        let grid = b.a.grid().clone();
        let u = bump(&grid, 0.2, c(0.0, 1.0));
        let mut g = EquivariantField::zero(grid.clone());
        g.add_term(Key::new(Slot::S11, Form::Function, 0), u.clone());
        g.add_term(Key::new(Slot::S22, Form::Function, 0), u.scale(c(-1.0, 0.0)));
        let out = b.d0(&g);
        let fd = build_fiducial(default_solution(), 3.0, grid.clone()).unwrap();
        // -Δu = -(u'' + u'/r) for a radial profile
        let lv = |k: usize| u.level(k).unwrap();
        let r = grid.nodes();
        let got = out.get(&Key::new(Slot::S11, Form::Function, 0)).unwrap();
        for k in 0..r.len() {
            let lap = lv(2)[k] + lv(1)[k] / r[k];
            let pot = 8.0 * 9.0 * r[k] * (2.0 * fd.h[k]).cosh();
            let want = -lap + lv(0)[k] * pot;
            assert!((got.values()[k] - want).norm() < 1e-8 * (1.0 + want.norm()), "k={k}");
        }
    }
}
