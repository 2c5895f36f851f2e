//! Weak form of one sector block: `G_ij = ⟨B e_i, B e_j⟩` with `B = i` for
//! degree 0 and `B = L*` for degree 2, so that `G` discretises `D⁰ = i*i`
//! and `D² = LL*`: regular at the inner end, Neumann at the outer end.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::band::{BandCholesky, BandMatrix};
use super::mesh::Mesh;
use super::sector::{Degree, SectorLayout, Sign};
use crate::error::{Error, Result};
use crate::fiducial::FiducialData;
use crate::field::{EquivariantField, Key};
use crate::operators::Background;
use crate::grid::RadialGrid;
use crate::C64;

/// Background sampled where the assembly needs it: at the quadrature points
/// and at the two ends of the interval.
#[derive(Debug, Clone)]
pub struct MeshBackground {
    pub mesh: Arc<Mesh>,
    pub quad: Background<EquivariantField>,
    pub ends: Background<EquivariantField>,
}

impl MeshBackground {
    pub fn new(fd: &FiducialData, mesh: Arc<Mesh>) -> Result<Self> {
        let g = mesh.nodes();
        let ends = Arc::new(RadialGrid::new(g.r_min(), g.r_max(), 2, g.layout(), 2)?);
        let quad = Background::from_fiducial(&fd.on_grid(mesh.quad().clone())?);
        let ends = Background::from_fiducial(&fd.on_grid(ends)?);
        Ok(MeshBackground { mesh, quad, ends })
    }

    pub fn t(&self) -> f64 {
        self.quad.t
    }
}

/// Assembled block of one sector.
///
/// The node-0 unknowns are eliminated by the regularity relation
/// `v_0 = ρ v_1` (`ρ = 0` for angular index `n ≠ 0`, else 1); the stored
/// matrices act on nodes `1..N`.
#[derive(Debug, Clone)]
pub struct RadialOperatorMatrix {
    pub t: f64,
    pub layout: Arc<SectorLayout>,
    /// Stiffness matrix on the reduced dofs.
    pub gram: BandMatrix,
    /// Lumped mass on the reduced dofs.
    pub mass: Vec<f64>,
    /// Regularity factors per local dof.
    pub regularity: Vec<f64>,
    chol: BandCholesky,
}

/// Nodal coefficients of one sector.
#[derive(Debug, Clone)]
pub struct ModeVector {
    pub layout: Arc<SectorLayout>,
    pub dofs: Vec<f64>,
}

impl ModeVector {
    pub fn zeros(layout: Arc<SectorLayout>) -> Self {
        let n = layout.num_dofs();
        ModeVector { layout, dofs: vec![0.0; n] }
    }

    pub fn ell_sign(&self) -> (u32, Sign) {
        self.layout.ell_sign()
    }

    /// `(label, nodal values)` per unknown.
    pub fn profiles(&self) -> Vec<(String, Vec<C64>)> {
        (0..self.layout.unknowns.len())
            .map(|u| (self.layout.unknowns[u].label.clone(), self.layout.unknown_values(&self.dofs, u)))
            .collect()
    }

    /// Squared norm under the lumped mass.
    pub fn norm_sq(&self) -> f64 {
        self.layout.mass().iter().zip(&self.dofs).map(|(m, x)| m * x * x).sum()
    }

    /// Fields at the quadrature points.
    pub fn fields(&self) -> Vec<EquivariantField> {
        self.layout.embed(&self.dofs)
    }
}

/// `B` applied to fields of the sector.
pub fn apply_b(bg: &Background<EquivariantField>, degree: Degree, x: &[EquivariantField]) -> (EquivariantField, EquivariantField) {
    match degree {
        Degree::Zero => bg.i_op(&x[0]),
        Degree::Two => bg.l_star(&x[0], &x[1]),
    }
}

/// Symmetric boundary form `r Re⟨T v, S w⟩_sym` at `r_max`, where
/// `Bv = S v' + T v` pointwise. Subtracting it from the Gram form turns the
/// natural boundary condition into `v' = 0` up to the antisymmetric part of
/// `SᵀT`, which comes from the `Φ`-coupling alone.
fn boundary_form(ends: &Background<EquivariantField>, layout: &SectorLayout) -> DMatrix<f64> {
    let g = ends.a.grid().clone();
    let w = layout.width();
    let k = g.len() - 1;
    let (r, wk) = (g.nodes()[k], g.weights()[k]);
    let ts: Vec<_> = (0..w).map(|j| apply_b(ends, layout.degree, &layout.local_fields(&g, j, [1.0, 0.0, 0.0]))).collect();
    let ss: Vec<_> = (0..w).map(|j| apply_b(ends, layout.degree, &layout.local_fields(&g, j, [0.0, 1.0, 0.0]))).collect();
    let pw = |x: &EquivariantField, y: &EquivariantField| x.pointwise_inner(y)[k] / wk * r;
    let c = DMatrix::from_fn(w, w, |a, b| pw(&ts[a].0, &ss[b].0) + pw(&ts[a].1, &ss[b].1));
    (&c + c.transpose()) * 0.5
}

/// Weak pairing `b_j = ⟨v, B e_j⟩` of quadrature-grid fields `v` (the
/// output tuple of `B`) against the image of every basis function, by the
/// same two-colour probing as the assembly.
pub fn pair_image(bg: &MeshBackground, layout: &SectorLayout, v: &[&EquivariantField]) -> Vec<f64> {
    let mesh = layout.mesh();
    let (nn, w) = (mesh.num_nodes(), layout.width());
    let mut b = vec![0.0; layout.num_dofs()];
    for j in 0..w {
        for color in 0..2 {
            let mut x = vec![0.0; layout.num_dofs()];
            for k in (color..nn).step_by(2) {
                x[k * w + j] = 1.0;
            }
            let (o0, o1) = apply_b(&bg.quad, layout.degree, &layout.embed(&x));
            let pw: Vec<f64> = o0.pointwise_inner(v[0]).iter().zip(o1.pointwise_inner(v[1])).map(|(a, c)| a + c).collect();
            for (e, val) in pw.iter().enumerate() {
                let node = if e % 2 == color { e } else { e + 1 };
                b[node * w + j] += val;
            }
        }
    }
    b
}

/// Node-0 value per unit node-1 value for a component of angular index
/// `±n`: zero (regular profiles are `O(r_min^n)`) unless `n = 0`, which keeps
/// the natural condition.
fn regularity_factor(n: f64) -> f64 {
    if n == 0.0 {
        1.0
    } else {
        0.0
    }
}

impl RadialOperatorMatrix {
    /// Assemble by probing: the dofs of one component at every other node
    /// have disjoint element supports, so `2 × width` applications of `B`
    /// recover every column.
    pub fn assemble(bg: &MeshBackground, layout: Arc<SectorLayout>) -> Result<Self> {
        let mesh = layout.mesh().clone();
        if !Arc::ptr_eq(&bg.mesh, &mesh) {
            return crate::error::param("background and sector use different meshes");
        }
        let (nn, ne, w) = (mesh.num_nodes(), mesh.num_elements(), layout.width());
        // per element: output (part, key) → values for the 2w local dofs
        let mut elem: Vec<BTreeMap<(usize, Key), Vec<C64>>> = vec![BTreeMap::new(); ne];
        for j in 0..w {
            for color in 0..2 {
                let mut x = vec![0.0; layout.num_dofs()];
                for k in (color..nn).step_by(2) {
                    x[k * w + j] = 1.0;
                }
                let (o0, o1) = apply_b(&bg.quad, layout.degree, &layout.embed(&x));
                for (part, out) in [(0usize, &o0), (1, &o1)] {
                    for (key, p) in out.terms() {
                        for (e, v) in p.values().iter().enumerate() {
                            if *v == C64::new(0.0, 0.0) {
                                continue;
                            }
                            let side = if e % 2 == color { 0 } else { 1 };
                            let slot = elem[e].entry((part, *key)).or_insert_with(|| vec![C64::new(0.0, 0.0); 2 * w]);
                            slot[side * w + j] += v;
                        }
                    }
                }
            }
        }
        let n = layout.num_dofs();
        let mut full = BandMatrix::zeros(n, 2 * w - 1);
        let wq = mesh.quad().weights();
        for (e, m) in elem.iter().enumerate() {
            for ((_, key), vals) in m {
                let s = 2.0 * PI * key.form.norm_sq() * wq[e];
                for a in 0..2 * w {
                    if vals[a] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for b in 0..=a {
                        let v = s * (vals[a] * vals[b].conj()).re;
                        if v != 0.0 {
                            full.add(e * w + a, e * w + b, v);
                        }
                    }
                }
            }
        }
        let bf = boundary_form(&bg.ends, &layout);
        for a in 0..w {
            for b in 0..=a {
                full.add(n - w + a, n - w + b, -bf[(a, b)]);
            }
        }
        // regularity elimination of node 0
        let regularity: Vec<f64> = (0..w)
            .map(|j| {
                let u = layout.local(j).0;
                let nabs = layout.unknowns[u].entries[0].key.n.unsigned_abs() as f64;
                regularity_factor(nabs)
            })
            .collect();
        let nr = n - w;
        let mut gram = BandMatrix::zeros(nr, 2 * w - 1);
        for i in 0..nr {
            for j in i.saturating_sub(2 * w - 1)..=i {
                gram.add(i, j, full.get(i + w, j + w));
            }
        }
        // node-1 block picks up ρ_a G[0a,1b] + ρ_b G[1a,0b] + ρ_aρ_b G[0a,0b]
        for a in 0..w {
            for b in 0..=a {
                let (ra, rb) = (regularity[a], regularity[b]);
                gram.add(a, b, ra * full.get(a, w + b) + rb * full.get(w + a, b) + ra * rb * full.get(a, b));
            }
        }
        let full_mass = layout.mass();
        let mut mass = full_mass[w..].to_vec();
        for a in 0..w {
            mass[a] += regularity[a] * regularity[a] * full_mass[a];
        }
        let chol = gram.cholesky()?;
        Ok(RadialOperatorMatrix { t: bg.t(), layout, gram, mass, regularity, chol })
    }

    pub fn degree(&self) -> Degree {
        self.layout.degree
    }

    pub fn ell_sign(&self) -> (u32, Sign) {
        self.layout.ell_sign()
    }

    fn reduce_load(&self, b: &[f64]) -> Vec<f64> {
        let w = self.layout.width();
        let mut out = b[w..].to_vec();
        for a in 0..w {
            out[a] += self.regularity[a] * b[a];
        }
        out
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let w = self.layout.width();
        let mut out = Vec::with_capacity(x.len() + w);
        out.extend((0..w).map(|a| self.regularity[a] * x[a]));
        out.extend_from_slice(x);
        out
    }

    /// Strong action `M⁻¹ G x` (node-0 values of `x` are ignored and
    /// reconstructed from the regularity relation).
    pub fn apply(&self, x: &ModeVector) -> ModeVector {
        let w = self.layout.width();
        let g = self.gram.mul_vec(&x.dofs[w..]);
        let y: Vec<f64> = g.iter().zip(&self.mass).map(|(a, m)| a / m).collect();
        ModeVector { layout: self.layout.clone(), dofs: self.expand(&y) }
    }

    /// `L²` norm of the discrete adjoint `M⁻¹ b` of a full-length weak load,
    /// measured on the constrained space.
    pub fn dual_norm(&self, b: &[f64]) -> f64 {
        self.reduce_load(b).iter().zip(&self.mass).map(|(v, m)| v * v / m).sum::<f64>().sqrt()
    }

    /// Solve `G ξ = b` for a full-length weak load vector.
    pub fn solve_weak(&self, b: &[f64]) -> Vec<f64> {
        self.expand(&self.chol.solve(&self.reduce_load(b)))
    }

    /// Solve `D ξ = rhs` for nodal data (load `M rhs` on the reduced dofs).
    pub fn green_solve(&self, rhs: &ModeVector) -> ModeVector {
        let w = self.layout.width();
        let b: Vec<f64> = rhs.dofs[w..].iter().zip(&self.mass).map(|(a, m)| a * m).collect();
        ModeVector { layout: self.layout.clone(), dofs: self.expand(&self.chol.solve(&b)) }
    }

    /// Green solve of a quadrature-grid source: returns `ξ` and `⟨G p, p⟩`.
    pub fn green_pair(&self, fields: &[&EquivariantField]) -> (ModeVector, f64) {
        let b = self.layout.pair(fields);
        let xi = self.solve_weak(&b);
        let val = b.iter().zip(&xi).map(|(a, x)| a * x).sum();
        (ModeVector { layout: self.layout.clone(), dofs: xi }, val)
    }

    /// Bilinear Green pairing `⟨G p, q⟩`.
    pub fn green_bilinear(&self, p: &[&EquivariantField], q: &[&EquivariantField]) -> f64 {
        let xi = self.solve_weak(&self.layout.pair(p));
        self.layout.pair(q).iter().zip(&xi).map(|(a, x)| a * x).sum()
    }

    fn scaled(&self) -> BandMatrix {
        let s: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        self.gram.scale_sym(&s)
    }

    /// Smallest eigenvalue of `G v = λ M v` by inverse subspace iteration.
    pub fn smallest_eigenvalue(&self) -> Result<f64> {
        let a = self.scaled();
        let n = a.dim();
        let p = n.min(6);
        let chol = a.cholesky()?;
        let mut x = DMatrix::from_fn(n, p, |i, j| ((i * (j + 1)) as f64 * 0.618 + j as f64).sin() + if i % p == j { 1.0 } else { 0.0 });
        let norm_bound = a.max_abs() * (2 * a.bandwidth() + 1) as f64;
        let (mut resid, mut prev) = (f64::INFINITY, f64::NAN);
        for _ in 0..500 {
            let mut y = DMatrix::zeros(n, p);
            for j in 0..p {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                y.set_column(j, &DVector::from_vec(chol.solve(&col)));
            }
            let q = y.qr().q();
            let mut aq = DMatrix::zeros(n, p);
            for j in 0..p {
                let col: Vec<f64> = q.column(j).iter().copied().collect();
                aq.set_column(j, &DVector::from_vec(a.mul_vec(&col)));
            }
            let h = q.transpose() * &aq;
            let eig = SymmetricEigen::new((&h + h.transpose()) * 0.5);
            let (imin, &theta) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let v = &q * eig.eigenvectors.column(imin);
            let r = &aq * eig.eigenvectors.column(imin) - &v * theta;
            resid = r.norm() / theta.abs().max(f64::MIN_POSITIVE);
            x = &q * &eig.eigenvectors;
            // the residual floors at ~eps ||A|| on wide grids; the Ritz value
            // error is quadratic in it
            let stalled = r.norm() < 1e-8 * norm_bound && (theta - prev).abs() <= 1e-13 * theta.abs();
            if resid < 1e-10 || stalled {
                return Ok(theta);
            }
            prev = theta;
        }
        Err(Error::Convergence { what: "inverse subspace iteration".into(), residual: resid })
    }

    /// All eigenvalues from a dense symmetric solve (small blocks only).
    pub fn dense_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.scaled().to_dense()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiducial::build_fiducial;
    use crate::grid::make_log_grid;
    use crate::painleve::default_solution;
    use crate::spectral::Mesh;

    fn setup(t: f64, r_min: f64, n: usize) -> (Arc<Mesh>, MeshBackground) {
        let mesh = Arc::new(Mesh::new(Arc::new(make_log_grid(r_min, 1.0, n).unwrap())).unwrap());
        let fd = build_fiducial(default_solution(), t, mesh.nodes().clone()).unwrap();
        let bg = MeshBackground::new(&fd, mesh.clone()).unwrap();
        (mesh, bg)
    }

    #[test]
    fn probing_matches_direct_gram_entries() {
        let (mesh, bg) = setup(2.0, 0.05, 40);
        for (deg, q) in [(Degree::Zero, 1), (Degree::Two, 3), (Degree::Two, 0)] {
            let l = Arc::new(SectorLayout::new(mesh.clone(), deg, q));
            let op = RadialOperatorMatrix::assemble(&bg, l.clone()).unwrap();
            let w = l.width();
            let x: Vec<f64> = (0..l.num_dofs() - w).map(|i| (0.37 * i as f64).sin()).collect();
            let y: Vec<f64> = (0..l.num_dofs() - w).map(|i| (0.91 * i as f64 + 0.3).cos()).collect();
            let (xf, yf) = (op.expand(&x), op.expand(&y));
            let (bx, by) = (apply_b(&bg.quad, deg, &l.embed(&xf)), apply_b(&bg.quad, deg, &l.embed(&yf)));
            let bf = boundary_form(&bg.ends, &l);
            let tail = |v: &[f64]| DVector::from_column_slice(&v[v.len() - w..]);
            let direct = bx.0.inner(&by.0) + bx.1.inner(&by.1) - tail(&x).dot(&(&bf * tail(&y)));
            let gy = op.gram.mul_vec(&y);
            let weak: f64 = x.iter().zip(&gy).map(|(a, b)| a * b).sum();
            assert!((direct - weak).abs() < 1e-10 * direct.abs().max(1.0), "{deg:?} {q}: {direct} {weak}");
        }
    }

    #[test]
    fn inverse_iteration_matches_dense_solve() {
        let (mesh, bg) = setup(3.0, 0.05, 30);
        for (deg, q) in [(Degree::Zero, 0), (Degree::Zero, 3), (Degree::Two, 2), (Degree::Two, 1)] {
            let op = RadialOperatorMatrix::assemble(&bg, Arc::new(SectorLayout::new(mesh.clone(), deg, q))).unwrap();
            let lam = op.smallest_eigenvalue().unwrap();
            let dense = op.dense_eigenvalues();
            assert!(dense[0] > 0.0);
            assert!((lam - dense[0]).abs() < 1e-8 * dense[0], "{lam} {}", dense[0]);
        }
    }

    #[test]
    fn green_solve_inverts_the_block() {
        let (mesh, bg) = setup(2.0, 0.05, 60);
        let l = Arc::new(SectorLayout::new(mesh, Degree::Two, 4));
        let op = RadialOperatorMatrix::assemble(&bg, l.clone()).unwrap();
        let rhs = ModeVector { layout: l.clone(), dofs: (0..l.num_dofs()).map(|i| (0.2 * i as f64).cos()).collect() };
        let back = op.apply(&op.green_solve(&rhs));
        let w = l.width();
        let err = back.dofs[w..].iter().zip(&rhs.dofs[w..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8);
    }

    #[test]
    fn diagonal_block_approximates_the_displayed_operator() {
        // D⁰ on i u diag(1,-1): -u'' - u'/r + 8t²r cosh(2h) u
        let t = 2.0;
        let (mesh, bg) = setup(t, 0.05, 400);
        let l = Arc::new(SectorLayout::new(mesh.clone(), Degree::Zero, 0));
        let op = RadialOperatorMatrix::assemble(&bg, l.clone()).unwrap();
        let r = mesh.nodes().nodes();
        let u = |r: f64| (3.0 * r).sin() * r * r;
        let lap = |r: f64| {
            let (s, c) = ((3.0 * r).sin(), (3.0 * r).cos());
            let d1 = 2.0 * r * s + 3.0 * r * r * c;
            let d2 = 2.0 * s + 12.0 * r * c - 9.0 * r * r * s;
            d2 + d1 / r
        };
        let x = ModeVector { layout: l, dofs: r.iter().map(|r| u(*r)).collect() };
        let got = op.apply(&x);
        let fd = build_fiducial(default_solution(), t, mesh.nodes().clone()).unwrap();
        for k in 20..r.len() - 20 {
            let want = -lap(r[k]) + 8.0 * t * t * r[k] * (2.0 * fd.h[k]).cosh() * u(r[k]);
            assert!((got.dofs[k] - want).abs() < 2e-3 * (1.0 + want.abs()), "k={k} {} {want}", got.dofs[k]);
        }
    }

    #[test]
    fn solutions_obey_the_regularity_relation() {
        let (mesh, bg) = setup(2.0, 0.05, 30);
        let l = Arc::new(SectorLayout::new(mesh, Degree::Two, 3));
        let op = RadialOperatorMatrix::assemble(&bg, l.clone()).unwrap();
        let rhs = ModeVector { layout: l.clone(), dofs: vec![1.0; l.num_dofs()] };
        let xi = op.green_solve(&rhs);
        let w = l.width();
        for a in 0..w {
            assert_eq!(xi.dofs[a], op.regularity[a] * xi.dofs[w + a]);
            assert!(op.regularity[a] <= 1.0);
        }
    }

    #[test]
    fn diagonal_eigenvalue_exceeds_the_potential_floor() {
        let (mesh, bg) = setup(1.0, 0.05, 80);
        let op = RadialOperatorMatrix::assemble(&bg, Arc::new(SectorLayout::degree0(mesh, 0, true))).unwrap();
        assert!(op.smallest_eigenvalue().unwrap() >= 8.0 * 0.05);
    }
}
