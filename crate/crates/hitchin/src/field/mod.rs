//! `sl(2,C)`-valued differential forms on the disk, stored as finite sums of
//! angular modes `p(r) e^{inθ} E_slot ∧ form`.
//!
//! Conventions: `z = r e^{iθ}`, flat metric, `|dz|² = |dz̄|² = 2`,
//! `|dz∧dz̄|² = 4`, `∗dz = -i dz`, `∗dz̄ = i dz̄`, `∗(dz∧dz̄) = -2i`,
//! `∗1 = (i/2) dz∧dz̄`, pointwise inner product `Re Tr(A B*)`.

mod polar;
mod profile;

pub use polar::PolarField;
pub use profile::Profile;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::grid::RadialGrid;
use crate::C64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    S11,
    S12,
    S21,
    S22,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::S11, Slot::S12, Slot::S21, Slot::S22];

    pub fn from_rc(row: usize, col: usize) -> Slot {
        match (row, col) {
            (0, 0) => Slot::S11,
            (0, 1) => Slot::S12,
            (1, 0) => Slot::S21,
            _ => Slot::S22,
        }
    }
    pub fn row(self) -> usize {
        matches!(self, Slot::S21 | Slot::S22) as usize
    }
    pub fn col(self) -> usize {
        matches!(self, Slot::S12 | Slot::S22) as usize
    }
    pub fn index(self) -> usize {
        2 * self.row() + self.col()
    }
    pub fn transpose(self) -> Slot {
        Slot::from_rc(self.col(), self.row())
    }
    /// Twice the rotation weight of the matrix unit.
    pub fn weight2(self) -> i32 {
        match self {
            Slot::S12 => -1,
            Slot::S21 => 1,
            _ => 0,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Slot::S11 => "11",
            Slot::S12 => "12",
            Slot::S21 => "21",
            Slot::S22 => "22",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Form {
    Function,
    Dz,
    Dzbar,
    DzDzbar,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Function, Form::Dz, Form::Dzbar, Form::DzDzbar];

    pub fn degree(self) -> u32 {
        match self {
            Form::Function => 0,
            Form::Dz | Form::Dzbar => 1,
            Form::DzDzbar => 2,
        }
    }
    pub fn norm_sq(self) -> f64 {
        match self {
            Form::Function => 1.0,
            Form::Dz | Form::Dzbar => 2.0,
            Form::DzDzbar => 4.0,
        }
    }
    /// Rotation weight of the form.
    pub fn weight(self) -> i32 {
        match self {
            Form::Dz => 1,
            Form::Dzbar => -1,
            _ => 0,
        }
    }
    pub fn index(self) -> usize {
        self as usize
    }
    pub fn name(self) -> &'static str {
        match self {
            Form::Function => "1",
            Form::Dz => "dz",
            Form::Dzbar => "dzbar",
            Form::DzDzbar => "dz^dzbar",
        }
    }
    /// `a ∧ b` as `(form, sign)`, or `None` when it vanishes.
    pub fn wedge(a: Form, b: Form) -> Option<(Form, f64)> {
        use Form::*;
        match (a, b) {
            (Function, x) | (x, Function) => Some((x, 1.0)),
            (Dz, Dzbar) => Some((DzDzbar, 1.0)),
            (Dzbar, Dz) => Some((DzDzbar, -1.0)),
            _ => None,
        }
    }
    /// Complex conjugate of the form as `(form, sign)`.
    pub fn conj(self) -> (Form, f64) {
        match self {
            Form::Function => (Form::Function, 1.0),
            Form::Dz => (Form::Dzbar, 1.0),
            Form::Dzbar => (Form::Dz, 1.0),
            Form::DzDzbar => (Form::DzDzbar, -1.0),
        }
    }
    /// Hodge star as `(form, factor)`.
    pub fn star(self) -> (Form, C64) {
        match self {
            Form::Function => (Form::DzDzbar, c(0.0, 0.5)),
            Form::Dz => (Form::Dz, c(0.0, -1.0)),
            Form::Dzbar => (Form::Dzbar, c(0.0, 1.0)),
            Form::DzDzbar => (Form::Function, c(0.0, -2.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub slot: Slot,
    pub form: Form,
    pub n: i32,
}

impl Key {
    pub fn new(slot: Slot, form: Form, n: i32) -> Key {
        Key { slot, form, n }
    }
    /// Twice the rotation charge: angular index + form weight + slot weight,
    /// shifted by -3/2 for Higgs-type components.
    pub fn charge2(self, higgs_type: bool) -> i32 {
        2 * self.n + 2 * self.form.weight() + self.slot.weight2() - if higgs_type { 3 } else { 0 }
    }
}

/// Operations shared by the mode representation and the polar-grid oracle.
pub trait FormAlgebra: Clone {
    fn add(&self, o: &Self) -> Self;
    fn scale(&self, c: C64) -> Self;
    fn wedge(&self, o: &Self) -> Self;
    fn adjoint(&self) -> Self;
    fn star(&self) -> Self;
    fn del(&self) -> Self;
    fn delbar(&self) -> Self;
    fn form_part(&self, f: Form) -> Self;
    fn zero_like(&self) -> Self;

    fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(c(-1.0, 0.0)))
    }
    fn d(&self) -> Self {
        self.del().add(&self.delbar())
    }
    /// Graded bracket `[x∧y] = x∧y - (-1)^{pq} y∧x`.
    fn bracket(&self, o: &Self) -> Self {
        let mut acc = self.zero_like();
        for fa in Form::ALL {
            let a = self.form_part(fa);
            for fb in Form::ALL {
                if Form::wedge(fa, fb).is_none() {
                    continue;
                }
                let b = o.form_part(fb);
                let sign = if fa.degree() * fb.degree() % 2 == 1 { 1.0 } else { -1.0 };
                acc = acc.add(&a.wedge(&b)).add(&b.wedge(&a).scale(c(sign, 0.0)));
            }
        }
        acc
    }
    /// `(1,0)` and `(0,1)` parts of a 1-form.
    fn part10(&self) -> Self {
        self.form_part(Form::Dz)
    }
    fn part01(&self) -> Self {
        self.form_part(Form::Dzbar)
    }
}

#[derive(Debug, Clone)]
pub struct EquivariantField {
    grid: Arc<RadialGrid>,
    terms: BTreeMap<Key, Profile>,
}

impl EquivariantField {
    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        EquivariantField { grid, terms: BTreeMap::new() }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &Profile)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> {
        self.terms.keys()
    }

    pub fn get(&self, key: &Key) -> Option<&Profile> {
        self.terms.get(key)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulate `p` into the term at `key`.
    pub fn add_term(&mut self, key: Key, p: Profile) {
        match self.terms.get_mut(&key) {
            Some(q) => q.add_assign(&p),
            None => {
                self.terms.insert(key, p);
            }
        }
    }

    pub fn with_term(mut self, key: Key, p: Profile) -> Self {
        self.add_term(key, p);
        self
    }

    /// Scalar (identity-matrix) term `p e^{inθ} form`.
    pub fn scalar(grid: Arc<RadialGrid>, form: Form, n: i32, p: Profile) -> Self {
        let mut f = EquivariantField::zero(grid);
        f.add_term(Key::new(Slot::S11, form, n), p.clone());
        f.add_term(Key::new(Slot::S22, form, n), p);
        f
    }

    /// Constant matrix `m` as a function (angular index 0), with exact jets.
    pub fn constant_matrix(grid: Arc<RadialGrid>, m: [[C64; 2]; 2]) -> Self {
        let n = grid.len();
        let mut f = EquivariantField::zero(grid);
        for s in Slot::ALL {
            let v = m[s.row()][s.col()];
            if v != C64::new(0.0, 0.0) {
                f.add_term(Key::new(s, Form::Function, 0), Profile::constant(n, v, 3));
            }
        }
        f
    }

    pub fn map_profiles<F: Fn(&Key, &Profile) -> Profile>(&self, f: F) -> Self {
        EquivariantField {
            grid: self.grid.clone(),
            terms: self.terms.iter().map(|(k, p)| (*k, f(k, p))).collect(),
        }
    }

    /// Multiply every term by a radial function.
    pub fn mul_profile(&self, p: &Profile) -> Self {
        self.map_profiles(|_, q| q.mul(p))
    }

    pub fn filter<F: Fn(&Key) -> bool>(&self, f: F) -> Self {
        EquivariantField {
            grid: self.grid.clone(),
            terms: self.terms.iter().filter(|(k, _)| f(k)).map(|(k, p)| (*k, p.clone())).collect(),
        }
    }

    /// Drop stored derivative levels.
    pub fn values_only(&self) -> Self {
        self.map_profiles(|_, p| p.truncate(1))
    }

    /// `L²` inner product `∫ Re Tr(A B*) |form|² r dr dθ`.
    pub fn inner(&self, o: &Self) -> f64 {
        self.pointwise_inner(o).iter().sum()
    }

    /// Per-node contributions to [`inner`](Self::inner), quadrature weights included.
    pub fn pointwise_inner(&self, o: &Self) -> Vec<f64> {
        let w = self.grid.weights();
        let mut out = vec![0.0; w.len()];
        for (k, p) in &self.terms {
            if let Some(q) = o.terms.get(k) {
                let s = 2.0 * PI * k.form.norm_sq();
                for (i, (a, b)) in p.values().iter().zip(q.values()).enumerate() {
                    out[i] += s * w[i] * (a * b.conj()).re;
                }
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Largest absolute profile value over all terms.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|p| p.max_abs()).fold(0.0, f64::max)
    }

    /// Pointwise value at node `k` and angle `θ`: one 2x2 matrix per form.
    pub fn eval(&self, k: usize, theta: f64) -> [[C64; 4]; 4] {
        let mut out = [[C64::new(0.0, 0.0); 4]; 4];
        for (key, p) in &self.terms {
            let e = C64::from_polar(1.0, key.n as f64 * theta);
            out[key.form.index()][key.slot.index()] += p.values()[k] * e;
        }
        out
    }

    /// Sup over the grid of the pointwise norm, sampling `n_theta` angles.
    pub fn sup_norm(&self, n_theta: usize) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..self.grid.len() {
            for j in 0..n_theta {
                let th = 2.0 * PI * j as f64 / n_theta as f64;
                let v = self.eval(k, th);
                let s: f64 = Form::ALL
                    .iter()
                    .map(|f| f.norm_sq() * v[f.index()].iter().map(|z| z.norm_sqr()).sum::<f64>())
                    .sum();
                best = best.max(s.sqrt());
            }
        }
        best
    }

    fn zero_same(&self) -> Self {
        EquivariantField::zero(self.grid.clone())
    }

    fn ddz(&self, p: &Profile, n: i32, sign: f64) -> Profile {
        // ½ (p' + sign n p / r)
        let dp = p.deriv(&self.grid);
        let inv_r = Profile::rpow(&self.grid, -1.0, p.depth());
        let t = p.mul(&inv_r).scale(c(sign * n as f64, 0.0));
        dp.add(&t).scale(c(0.5, 0.0))
    }

    /// Highest stored derivative depth among the terms (1 if empty).
    pub fn depth(&self) -> usize {
        self.terms.values().map(|p| p.depth()).min().unwrap_or(1)
    }
}

impl FormAlgebra for EquivariantField {
    fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, p) in &o.terms {
            out.add_term(*k, p.clone());
        }
        out
    }

    fn scale(&self, s: C64) -> Self {
        self.map_profiles(|_, p| p.scale(s))
    }

    fn wedge(&self, o: &Self) -> Self {
        let mut out = self.zero_same();
        for (ka, pa) in &self.terms {
            for (kb, pb) in &o.terms {
                if ka.slot.col() != kb.slot.row() {
                    continue;
                }
                if let Some((form, sign)) = Form::wedge(ka.form, kb.form) {
                    let slot = Slot::from_rc(ka.slot.row(), kb.slot.col());
                    let p = pa.mul(pb);
                    out.add_term(Key::new(slot, form, ka.n + kb.n), if sign < 0.0 { p.scale(c(-1.0, 0.0)) } else { p });
                }
            }
        }
        out
    }

    fn bracket(&self, o: &Self) -> Self {
        let mut out = self.zero_same();
        let mut push = |ka: &Key, pa: &Profile, kb: &Key, pb: &Profile, sign: f64| {
            if ka.slot.col() != kb.slot.row() {
                return;
            }
            if let Some((form, s)) = Form::wedge(ka.form, kb.form) {
                let slot = Slot::from_rc(ka.slot.row(), kb.slot.col());
                out.add_term(Key::new(slot, form, ka.n + kb.n), pa.mul(pb).scale(c(s * sign, 0.0)));
            }
        };
        for (ka, pa) in &self.terms {
            for (kb, pb) in &o.terms {
                let sign = if ka.form.degree() * kb.form.degree() % 2 == 1 { 1.0 } else { -1.0 };
                push(ka, pa, kb, pb, 1.0);
                push(kb, pb, ka, pa, sign);
            }
        }
        out
    }

    fn adjoint(&self) -> Self {
        let mut out = self.zero_same();
        for (k, p) in &self.terms {
            let (form, s) = k.form.conj();
            out.add_term(Key::new(k.slot.transpose(), form, -k.n), p.conj().scale(c(s, 0.0)));
        }
        out
    }

    fn star(&self) -> Self {
        let mut out = self.zero_same();
        for (k, p) in &self.terms {
            let (form, s) = k.form.star();
            out.add_term(Key::new(k.slot, form, k.n), p.scale(s));
        }
        out
    }

    fn del(&self) -> Self {
        let mut out = self.zero_same();
        for (k, p) in &self.terms {
            match k.form {
                Form::Function => out.add_term(Key::new(k.slot, Form::Dz, k.n - 1), self.ddz(p, k.n, 1.0)),
                Form::Dzbar => out.add_term(Key::new(k.slot, Form::DzDzbar, k.n - 1), self.ddz(p, k.n, 1.0)),
                _ => {}
            }
        }
        out
    }

    fn delbar(&self) -> Self {
        let mut out = self.zero_same();
        for (k, p) in &self.terms {
            match k.form {
                Form::Function => out.add_term(Key::new(k.slot, Form::Dzbar, k.n + 1), self.ddz(p, k.n, -1.0)),
                Form::Dz => out.add_term(
                    Key::new(k.slot, Form::DzDzbar, k.n + 1),
                    self.ddz(p, k.n, -1.0).scale(c(-1.0, 0.0)),
                ),
                _ => {}
            }
        }
        out
    }

    fn form_part(&self, f: Form) -> Self {
        self.filter(|k| k.form == f)
    }

    fn zero_like(&self) -> Self {
        self.zero_same()
    }
}
