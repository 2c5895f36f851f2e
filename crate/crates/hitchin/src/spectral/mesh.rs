//! Piecewise-linear elements on a radial grid.
//!
//! Unknowns live at the grid nodes and are linear in the grid variable
//! (`log r` or `r`) on each element. Operators are evaluated at element
//! midpoints, where the interpolant has exact jets, and integrated with the
//! one-point rule of [`RadialGrid::element_midpoints`].

use std::sync::Arc;

use crate::error::Result;
use crate::field::Profile;
use crate::grid::{Layout, RadialGrid};
use crate::C64;

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Arc<RadialGrid>,
    quad: Arc<RadialGrid>,
    /// `d/dr` and `d²/dr²` of the interpolant per unit nodal jump.
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Arc<RadialGrid>) -> Result<Self> {
        let quad = Arc::new(nodes.element_midpoints()?);
        let h = nodes.step();
        let (d1, d2) = quad
            .nodes()
            .iter()
            .map(|&r| match nodes.layout() {
                Layout::Logarithmic => (1.0 / (h * r), -1.0 / (h * r * r)),
                Layout::Uniform => (1.0 / h, 0.0),
            })
            .unzip();
        Ok(Mesh { nodes, quad, d1, d2 })
    }

    pub fn nodes(&self) -> &Arc<RadialGrid> {
        &self.nodes
    }

    /// Quadrature grid (element midpoints).
    pub fn quad(&self) -> &Arc<RadialGrid> {
        &self.quad
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.quad.len()
    }

    /// Interpolant of nodal values at the midpoints, with jets.
    pub fn interpolate(&self, u: &[C64]) -> Profile {
        let m = self.num_elements();
        let mut lv = [Vec::with_capacity(m), Vec::with_capacity(m), Vec::with_capacity(m)];
        for e in 0..m {
            let jump = u[e + 1] - u[e];
            lv[0].push(0.5 * (u[e] + u[e + 1]));
            lv[1].push(jump * self.d1[e]);
            lv[2].push(jump * self.d2[e]);
        }
        Profile::with_jets(lv.into())
    }

    /// Lumped nodal weights `∫ φ_k r dr`.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let w = self.quad.weights();
        let mut out = vec![0.0; self.num_nodes()];
        for (e, we) in w.iter().enumerate() {
            out[e] += 0.5 * we;
            out[e + 1] += 0.5 * we;
        }
        out
    }

    /// Nodal values of a midpoint profile: averages of the neighbouring
    /// elements, end elements copied.
    pub fn to_nodes(&self, v: &[C64]) -> Vec<C64> {
        let m = v.len();
        let mut out = Vec::with_capacity(m + 1);
        out.push(v[0]);
        for e in 1..m {
            out.push(0.5 * (v[e - 1] + v[e]));
        }
        out.push(v[m - 1]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_log_grid, make_uniform_grid};

    #[test]
    fn interpolant_jets_are_exact_for_linear_data() {
        let g = Arc::new(make_log_grid(0.1, 2.0, 30).unwrap());
        let mesh = Mesh::new(g.clone()).unwrap();
        // u = log r is linear in the grid variable
        let u: Vec<C64> = g.nodes().iter().map(|r| C64::new(r.ln(), 0.0)).collect();
        let p = mesh.interpolate(&u);
        for (e, r) in mesh.quad().nodes().iter().enumerate() {
            assert!((p.values()[e].re - r.ln()).abs() < 1e-12);
            assert!((p.level(1).unwrap()[e].re - 1.0 / r).abs() < 1e-10);
            assert!((p.level(2).unwrap()[e].re + 1.0 / (r * r)).abs() < 1e-9);
        }
        let g = Arc::new(make_uniform_grid(0.1, 2.0, 30).unwrap());
        let mesh = Mesh::new(g.clone()).unwrap();
        let u: Vec<C64> = g.nodes().iter().map(|r| C64::new(3.0 * r, -r)).collect();
        let p = mesh.interpolate(&u);
        assert!(p.level(1).unwrap().iter().all(|d| (d - C64::new(3.0, -1.0)).norm() < 1e-12));
    }

    #[test]
    fn lumped_weights_sum_to_the_area() {
        let g = Arc::new(make_log_grid(0.01, 1.0, 50).unwrap());
        let s: f64 = Mesh::new(g).unwrap().lumped_weights().iter().sum();
        assert!((s - 0.5 * (1.0 - 1e-4)).abs() < 1e-13);
    }
}
