//! Brute-force check of the sector decomposition: apply the full 2-D
//! Laplacian on a polar grid to a field of one sector and measure what lands
//! outside it.

use std::collections::BTreeSet;

use crate::field::{EquivariantField, Key, PolarField};
use crate::operators::Background;

use super::sector::{Degree, SectorLayout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageReport {
    /// Norm of the out-of-sector part relative to the whole image.
    pub leakage: f64,
    /// Largest deviation between the polar image and the mode algebra,
    /// relative to the largest image value.
    pub mismatch: f64,
}

/// `bg` must live on the node grid of the layout's mesh; `x` is a dof
/// vector of the layout.
pub fn mode_leakage(bg: &Background<EquivariantField>, layout: &SectorLayout, x: &[f64], nt: usize) -> LeakageReport {
    let fields: Vec<EquivariantField> = layout.embed_nodal(x);
    // values only, so both paths differentiate with the same stencil
    let bgv = Background::new(bg.t, bg.a.values_only(), bg.phi.values_only());
    let bp = bgv.to_polar(nt);
    let polar: Vec<PolarField> = fields.iter().map(|f| PolarField::from_equivariant(f, nt)).collect();
    let (img_p, img_m): (Vec<PolarField>, Vec<EquivariantField>) = match layout.degree {
        Degree::Zero => (vec![bp.d0(&polar[0])], vec![bgv.d0(&fields[0])]),
        Degree::Two => {
            let (a, b) = bp.d2(&polar[0], &polar[1]);
            let (c, d) = bgv.d2(&fields[0], &fields[1]);
            (vec![a, b], vec![c, d])
        }
    };
    let keys: BTreeSet<(usize, Key)> =
        layout.unknowns.iter().flat_map(|u| u.entries.iter().map(|e| (e.part, e.key))).collect();
    let (mut inside, mut outside) = (0.0, 0.0);
    let mut scale = 0.0f64;
    let mut mismatch = 0.0f64;
    for (part, (p, m)) in img_p.iter().zip(&img_m).enumerate() {
        let modes = p.angular_modes();
        let keep = modes.filter(|k| keys.contains(&(part, *k)));
        let drop = modes.filter(|k| !keys.contains(&(part, *k)));
        inside += keep.inner(&keep);
        outside += drop.inner(&drop);
        scale = scale.max(p.max_abs());
        mismatch = mismatch.max(PolarField::from_equivariant(m, nt).max_diff(p, |_| true));
    }
    LeakageReport { leakage: (outside / (inside + outside)).sqrt(), mismatch: mismatch / scale }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fiducial::build_fiducial;
    use crate::grid::make_log_grid;
    use crate::painleve::default_solution;
    use crate::spectral::Mesh;

    #[test]
    fn sectors_are_invariant_under_the_full_laplacians() {
        let g = Arc::new(make_log_grid(0.05, 1.0, 24).unwrap());
        let mesh = Arc::new(Mesh::new(g.clone()).unwrap());
        let bg = Background::from_fiducial(&build_fiducial(default_solution(), 2.0, g).unwrap());
        for (deg, q) in [(Degree::Two, 4), (Degree::Two, 3), (Degree::Zero, 2), (Degree::Zero, 1)] {
            let l = SectorLayout::new(mesh.clone(), deg, q);
            let x: Vec<f64> = (0..l.num_dofs()).map(|i| (0.37 * i as f64).sin()).collect();
            let rep = mode_leakage(&bg, &l, &x, 32);
            assert!(rep.leakage <= 1e-8, "{deg:?} {q}: {rep:?}");
            assert!(rep.mismatch <= 1e-10, "{deg:?} {q}: {rep:?}");
        }
    }
}
