//! Rotation sectors: the unknowns of one invariant subspace of `D⁰` or `D²`
//! and their embedding into [`EquivariantField`]s.
//!
//! A term `p e^{inθ} E_slot form` carries twice-charge
//! [`Key::charge2`]; the background `(A, Φ)` has charge zero, so both
//! Laplacians preserve `|charge|`. The sector `K` collects every term of
//! charge `±K`, subject to the reality condition of the `su(2)` parts.
//! For degree 2, `K = 2ℓ` is `H_ℓ^+` and `K = 2ℓ - 1` is `H_ℓ^-`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{param, Result};
use crate::field::{c, EquivariantField, Form, Key, Profile, Slot, I, ONE};
use crate::grid::RadialGrid;

use super::Mesh;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degree {
    /// `Ω⁰(su)`
    Zero,
    /// `Ω²(su) ⊕ Ω²(sl)`
    Two,
}

impl Degree {
    pub fn as_u8(self) -> u8 {
        match self {
            Degree::Zero => 0,
            Degree::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Where one unknown profile `u` lands: `coef · u` (or `coef · ū`) at `key`
/// in field `part`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub part: usize,
    pub key: Key,
    pub coef: C64,
    pub conj: bool,
}

#[derive(Debug, Clone)]
pub struct Unknown {
    pub label: String,
    pub entries: Vec<Entry>,
    /// Real-valued unknown (one dof per node instead of two).
    pub real: bool,
}

impl Unknown {
    pub fn width(&self) -> usize {
        if self.real {
            1
        } else {
            2
        }
    }
    fn key_set(&self) -> BTreeSet<(usize, Key)> {
        self.entries.iter().map(|e| (e.part, e.key)).collect()
    }
}

/// Unknowns of one sector, with node-major dof numbering
/// `dof = node * width + local`.
#[derive(Debug, Clone)]
pub struct SectorLayout {
    pub degree: Degree,
    pub charge: u32,
    pub unknowns: Vec<Unknown>,
    mesh: Arc<Mesh>,
    /// local dof → (unknown, imaginary part?)
    local: Vec<(usize, bool)>,
}

fn e(part: usize, slot: Slot, form: Form, n: i32, coef: C64, conj: bool) -> Entry {
    Entry { part, key: Key::new(slot, form, n), coef, conj }
}

/// Candidate unknowns whose leading entry has twice-charge `q`.
fn candidates(degree: Degree, q: i32) -> Vec<Unknown> {
    let mut out = Vec::new();
    let mut push = |label: String, entries: Vec<Entry>, real: bool| out.push(Unknown { label, entries, real });
    // n solving 2n + shift = q
    let solve = |shift: i32| -> Option<i32> { ((q - shift) % 2 == 0).then_some((q - shift) / 2) };
    match degree {
        Degree::Zero => {
            let f = Form::Function;
            if let Some(n) = solve(0) {
                if n == 0 {
                    push("gamma_d0".into(), vec![e(0, Slot::S11, f, 0, I, false), e(0, Slot::S22, f, 0, -I, false)], true);
                } else {
                    push(
                        format!("gamma_d{n}"),
                        vec![
                            e(0, Slot::S11, f, n, I, false),
                            e(0, Slot::S11, f, -n, I, true),
                            e(0, Slot::S22, f, n, -I, false),
                            e(0, Slot::S22, f, -n, -I, true),
                        ],
                        false,
                    );
                }
            }
            if let Some(n) = solve(-1) {
                push(format!("gamma_o{n}"), vec![e(0, Slot::S12, f, n, ONE, false), e(0, Slot::S21, f, -n, -ONE, true)], false);
            }
        }
        Degree::Two => {
            let f = Form::DzDzbar;
            // μ ∈ Ω²(su): hermitian coefficient of dz∧dz̄
            if let Some(n) = solve(0) {
                if n == 0 {
                    push("mu_d0".into(), vec![e(0, Slot::S11, f, 0, ONE, false), e(0, Slot::S22, f, 0, -ONE, false)], true);
                } else {
                    push(
                        format!("mu_d{n}"),
                        vec![
                            e(0, Slot::S11, f, n, ONE, false),
                            e(0, Slot::S11, f, -n, ONE, true),
                            e(0, Slot::S22, f, n, -ONE, false),
                            e(0, Slot::S22, f, -n, -ONE, true),
                        ],
                        false,
                    );
                }
            }
            if let Some(n) = solve(-1) {
                push(format!("mu_o{n}"), vec![e(0, Slot::S12, f, n, ONE, false), e(0, Slot::S21, f, -n, ONE, true)], false);
            }
            // σ ∈ Ω²(sl), Higgs type
            if let Some(n) = solve(-3) {
                push(format!("sigma_d{n}"), vec![e(1, Slot::S11, f, n, ONE, false), e(1, Slot::S22, f, n, -ONE, false)], false);
            }
            if let Some(n) = solve(-4) {
                push(format!("sigma_12_{n}"), vec![e(1, Slot::S12, f, n, ONE, false)], false);
            }
            if let Some(n) = solve(-2) {
                push(format!("sigma_21_{n}"), vec![e(1, Slot::S21, f, n, ONE, false)], false);
            }
        }
    }
    out
}

impl SectorLayout {
    /// All unknowns of twice-charge `±charge`.
    pub fn new(mesh: Arc<Mesh>, degree: Degree, charge: u32) -> Self {
        let q = charge as i32;
        let mut unknowns: Vec<Unknown> = Vec::new();
        let mut seen: Vec<BTreeSet<(usize, Key)>> = Vec::new();
        let charges = if q == 0 { vec![0] } else { vec![q, -q] };
        for qq in charges {
            for u in candidates(degree, qq) {
                let ks = u.key_set();
                if !seen.contains(&ks) {
                    seen.push(ks);
                    unknowns.push(u);
                }
            }
        }
        let mut local = Vec::new();
        for (i, u) in unknowns.iter().enumerate() {
            local.push((i, false));
            if !u.real {
                local.push((i, true));
            }
        }
        SectorLayout { degree, charge, unknowns, mesh, local }
    }

    /// Degree-2 sector for `H_ℓ^±`.
    pub fn degree2(mesh: Arc<Mesh>, ell: u32, sign: Sign) -> Result<Self> {
        match sign {
            Sign::Plus => Ok(Self::new(mesh, Degree::Two, 2 * ell)),
            Sign::Minus if ell >= 1 => Ok(Self::new(mesh, Degree::Two, 2 * ell - 1)),
            Sign::Minus => param("the minus sector needs ell >= 1"),
        }
    }

    /// Degree-0 sector containing the diagonal (`2n`) or off-diagonal
    /// (`2n - 1`) mode `n`.
    pub fn degree0(mesh: Arc<Mesh>, n: i32, diagonal: bool) -> Self {
        let q = if diagonal { 2 * n } else { 2 * n - 1 };
        Self::new(mesh, Degree::Zero, q.unsigned_abs())
    }

    /// `(ℓ, sign)` of a degree-2 sector.
    pub fn ell_sign(&self) -> (u32, Sign) {
        if self.charge.is_multiple_of(2) {
            (self.charge / 2, Sign::Plus)
        } else {
            (self.charge.div_ceil(2), Sign::Minus)
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn width(&self) -> usize {
        self.local.len()
    }
    pub fn num_dofs(&self) -> usize {
        self.width() * self.mesh.num_nodes()
    }
    pub fn num_parts(&self) -> usize {
        match self.degree {
            Degree::Zero => 1,
            Degree::Two => 2,
        }
    }
    /// Whether field `part` is of Higgs type (`σ`).
    pub fn higgs_part(degree: Degree, part: usize) -> bool {
        degree == Degree::Two && part == 1
    }

    /// `(unknown, imaginary?)` for a local dof index.
    pub fn local(&self, j: usize) -> (usize, bool) {
        self.local[j]
    }

    /// Nodal values of unknown `u`.
    pub fn unknown_values(&self, x: &[f64], u: usize) -> Vec<C64> {
        let w = self.width();
        let j0 = self.local.iter().position(|l| l.0 == u).expect("unknown index");
        (0..self.mesh.num_nodes())
            .map(|k| {
                let re = x[k * w + j0];
                let im = if self.unknowns[u].real { 0.0 } else { x[k * w + j0 + 1] };
                c(re, im)
            })
            .collect()
    }

    fn build(&self, x: &[f64], profile: impl Fn(&[C64]) -> Profile, grid: &Arc<RadialGrid>) -> Vec<EquivariantField> {
        let mut out = vec![EquivariantField::zero(grid.clone()); self.num_parts()];
        for (ui, u) in self.unknowns.iter().enumerate() {
            let vals = self.unknown_values(x, ui);
            if vals.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            let p = profile(&vals);
            for en in &u.entries {
                let q = if en.conj { p.conj() } else { p.clone() };
                out[en.part].add_term(en.key, q.scale(en.coef));
            }
        }
        out
    }

    /// Fields of the dof vector `x` at the quadrature points, with jets.
    pub fn embed(&self, x: &[f64]) -> Vec<EquivariantField> {
        self.build(x, |v| self.mesh.interpolate(v), self.mesh.quad())
    }

    /// Fields of `x` at the nodes (values only).
    pub fn embed_nodal(&self, x: &[f64]) -> Vec<EquivariantField> {
        self.build(x, |v| Profile::new(v.to_vec()), self.mesh.nodes())
    }

    /// Local dof `j` as a field on `grid` whose profile has the jets
    /// `(v, v', v'')` at every node.
    pub fn local_fields(&self, grid: &Arc<RadialGrid>, j: usize, jets: [f64; 3]) -> Vec<EquivariantField> {
        let (ui, imag) = self.local[j];
        let unit = if imag { I } else { ONE };
        let n = grid.len();
        let p = Profile::with_jets(jets.iter().map(|v| vec![unit * *v; n]).collect());
        let mut out = vec![EquivariantField::zero(grid.clone()); self.num_parts()];
        for en in &self.unknowns[ui].entries {
            let q = if en.conj { p.conj() } else { p.clone() };
            out[en.part].add_term(en.key, q.scale(en.coef));
        }
        out
    }

    /// Weak pairing `b_i = ⟨e_i, field⟩` of quadrature-grid fields against
    /// every basis function.
    pub fn pair(&self, fields: &[&EquivariantField]) -> Vec<f64> {
        let w = self.width();
        let wts = self.mesh.quad().weights();
        let mut b = vec![0.0; self.num_dofs()];
        for (j, &(ui, imag)) in self.local.iter().enumerate() {
            let unit = if imag { I } else { ONE };
            for en in &self.unknowns[ui].entries {
                let Some(p) = fields[en.part].get(&en.key) else { continue };
                let v = en.coef * if en.conj { unit.conj() } else { unit };
                let s = PI * en.key.form.norm_sq();
                for (e, y) in p.values().iter().enumerate() {
                    let contrib = s * wts[e] * (v * y.conj()).re;
                    b[e * w + j] += contrib;
                    b[(e + 1) * w + j] += contrib;
                }
            }
        }
        b
    }

    /// Lumped (diagonal) mass matrix.
    pub fn mass(&self) -> Vec<f64> {
        let w = self.width();
        let lw = self.mesh.lumped_weights();
        let mut m = vec![0.0; self.num_dofs()];
        for (j, &(ui, _)) in self.local.iter().enumerate() {
            let s: f64 = self.unknowns[ui].entries.iter().map(|en| 2.0 * PI * en.key.form.norm_sq() * en.coef.norm_sqr()).sum();
            for (k, lk) in lw.iter().enumerate() {
                m[k * w + j] = s * lk;
            }
        }
        m
    }

    /// Strong-form components at node `k`: each local dof reads its
    /// unknown's first entry.
    pub fn read_local(&self, fields: &[EquivariantField], k: usize) -> Vec<f64> {
        self.local
            .iter()
            .map(|&(ui, imag)| {
                let en = &self.unknowns[ui].entries[0];
                let v = fields[en.part].get(&en.key).map_or(C64::new(0.0, 0.0), |p| p.values()[k] / en.coef);
                if imag {
                    v.im
                } else {
                    v.re
                }
            })
            .collect()
    }

    /// Whether every term of `fields` belongs to this sector.
    pub fn contains(&self, fields: &[&EquivariantField]) -> bool {
        let keys: BTreeSet<(usize, Key)> = self.unknowns.iter().flat_map(|u| u.key_set()).collect();
        fields.iter().enumerate().all(|(part, f)| f.keys().all(|k| keys.contains(&(part, *k))))
    }
}

/// Twice-charges `|q|` present in a field tuple of the given degree.
pub fn sectors_of(degree: Degree, fields: &[&EquivariantField]) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for (part, f) in fields.iter().enumerate() {
        for k in f.keys() {
            out.insert(k.charge2(SectorLayout::higgs_part(degree, part)).unsigned_abs());
        }
    }
    out
}

/// Restriction of `fields` to the keys of sector `charge`.
pub fn restrict(degree: Degree, fields: &[&EquivariantField], charge: u32) -> Vec<EquivariantField> {
    fields
        .iter()
        .enumerate()
        .map(|(part, f)| f.filter(|k| k.charge2(SectorLayout::higgs_part(degree, part)).unsigned_abs() == charge))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_log_grid;

    fn mesh() -> Arc<Mesh> {
        Arc::new(Mesh::new(Arc::new(make_log_grid(0.1, 1.0, 12).unwrap())).unwrap())
    }

    fn wave(n: usize, a: f64, b: f64) -> Vec<f64> {
        (0..n).map(|i| (a * i as f64 + b).sin()).collect()
    }

    #[test]
    fn plus_sector_has_the_five_pair_components() {
        for ell in 1..5u32 {
            let l = SectorLayout::degree2(mesh(), ell, Sign::Plus).unwrap();
            let ell = ell as i32;
            let mut keys: Vec<(usize, Key)> = l.unknowns.iter().map(|u| (u.entries[0].part, u.entries[0].key)).collect();
            keys.sort();
            let mut want = vec![
                (0, Key::new(Slot::S11, Form::DzDzbar, ell)),
                (1, Key::new(Slot::S12, Form::DzDzbar, ell + 2)),
                (1, Key::new(Slot::S12, Form::DzDzbar, -ell + 2)),
                (1, Key::new(Slot::S21, Form::DzDzbar, ell + 1)),
                (1, Key::new(Slot::S21, Form::DzDzbar, -ell + 1)),
            ];
            want.sort();
            assert_eq!(keys, want);
        }
        assert!(SectorLayout::degree2(mesh(), 0, Sign::Minus).is_err());
    }

    #[test]
    fn sectors_partition_a_generic_field() {
        let l = SectorLayout::new(mesh(), Degree::Two, 3);
        let f = l.embed(&wave(l.num_dofs(), 1.0, 0.0));
        let refs: Vec<&EquivariantField> = f.iter().collect();
        assert_eq!(sectors_of(Degree::Two, &refs), BTreeSet::from([3]));
        assert!(l.contains(&refs));
    }

    #[test]
    fn pairing_is_the_l2_inner_product_with_the_embedding() {
        for (deg, q) in [(Degree::Zero, 0), (Degree::Zero, 3), (Degree::Two, 0), (Degree::Two, 5)] {
            let l = SectorLayout::new(mesh(), deg, q);
            let x = wave(l.num_dofs(), 0.7, 1.1);
            let y = wave(l.num_dofs(), 1.3, 0.2);
            let (fx, fy) = (l.embed(&x), l.embed(&y));
            let direct: f64 = fx.iter().zip(&fy).map(|(a, b)| a.inner(b)).sum();
            let b = l.pair(&fy.iter().collect::<Vec<_>>());
            let weak: f64 = x.iter().zip(&b).map(|(a, b)| a * b).sum();
            assert!((direct - weak).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn lumped_mass_is_exact_on_constants() {
        let l = SectorLayout::new(mesh(), Degree::Two, 0);
        let x: Vec<f64> = (0..l.num_dofs()).map(|i| if l.local(i % l.width()).1 { 0.0 } else { 1.0 }).collect();
        let f = l.embed(&x);
        let norm: f64 = f.iter().map(|a| a.inner(a)).sum();
        let m: f64 = l.mass().iter().zip(&x).map(|(m, x)| m * x * x).sum();
        assert!((norm - m).abs() < 1e-12 * norm);
    }

    #[test]
    fn embedded_su_parts_are_skew_hermitian() {
        use crate::field::FormAlgebra;
        let l = SectorLayout::new(mesh(), Degree::Zero, 4);
        let f = &l.embed(&wave(l.num_dofs(), 0.3, 0.0))[0];
        assert!(f.add(&f.adjoint()).max_abs() < 1e-14);
        let l = SectorLayout::new(mesh(), Degree::Two, 1);
        let mu = &l.embed(&wave(l.num_dofs(), 0.3, 0.0))[0];
        // dz∧dz̄ is imaginary, so a hermitian coefficient gives an anti-hermitian form
        assert!(mu.add(&mu.adjoint()).max_abs() < 1e-14);
    }
}
