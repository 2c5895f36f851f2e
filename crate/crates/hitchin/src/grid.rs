//! Radial grids, quadrature against `r dr` and finite-difference stencils.

use std::ops::{Add, Mul};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Logarithmic,
    Uniform,
}

/// One row of a derivative stencil: `d/dr v[k] = sum_j w[j] v[start + j]`.
#[derive(Debug, Clone)]
struct StencilRow {
    start: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    layout: Layout,
    order: usize,
    stencil: Vec<StencilRow>,
}

/// Geometrically spaced grid with second-order differentiation.
pub fn make_log_grid(r_min: f64, r_max: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_min, r_max, n, Layout::Logarithmic, 2)
}

/// Equally spaced grid with second-order differentiation.
pub fn make_uniform_grid(r_min: f64, r_max: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_min, r_max, n, Layout::Uniform, 2)
}

impl RadialGrid {
    /// `order` is the accuracy of the differentiation stencil (2, 4 or 6).
    pub fn new(r_min: f64, r_max: f64, n: usize, layout: Layout, order: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite() && r_max.is_finite() && r_min < r_max) {
            return param(format!("grid bounds must satisfy 0 < r_min < r_max, got ({r_min}, {r_max})"));
        }
        if n < 2 {
            return param(format!("grid needs at least two nodes, got {n}"));
        }
        if !matches!(order, 2 | 4 | 6) {
            return param(format!("differentiation order must be 2, 4 or 6, got {order}"));
        }
        let nodes: Vec<f64> = match layout {
            Layout::Logarithmic => {
                let (a, b) = (r_min.ln(), r_max.ln());
                (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
            }
            Layout::Uniform => (0..n).map(|k| r_min + (r_max - r_min) * k as f64 / (n - 1) as f64).collect(),
        };
        let mut nodes = nodes;
        nodes[0] = r_min;
        nodes[n - 1] = r_max;
        let weights = quadrature_weights(&nodes, layout);
        let mut grid = RadialGrid { nodes, weights, layout, order, stencil: Vec::new() };
        grid.stencil = grid.build_stencil();
        Ok(grid)
    }

    /// Element midpoints (in the grid variable) as a grid of `n - 1` nodes
    /// whose weights are the element integrals `∫ r dr`, i.e. a one-point
    /// quadrature rule per element.
    pub fn element_midpoints(&self) -> Result<Self> {
        let n = self.len();
        if n < 3 {
            return param(format!("element midpoints need at least three nodes, got {n}"));
        }
        let pairs = self.nodes.windows(2);
        let nodes: Vec<f64> = match self.layout {
            Layout::Logarithmic => pairs.clone().map(|w| (w[0] * w[1]).sqrt()).collect(),
            Layout::Uniform => pairs.clone().map(|w| 0.5 * (w[0] + w[1])).collect(),
        };
        let weights = pairs.map(|w| 0.5 * (w[1] * w[1] - w[0] * w[0])).collect();
        let mut grid = RadialGrid { nodes, weights, layout: self.layout, order: self.order, stencil: Vec::new() };
        grid.stencil = grid.build_stencil();
        Ok(grid)
    }

    /// Same nodes with a different differentiation order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        RadialGrid::new(self.r_min(), self.r_max(), self.len(), self.layout, order)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }
    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
    pub fn layout(&self) -> Layout {
        self.layout
    }
    pub fn order(&self) -> usize {
        self.order
    }

    /// Largest distance between a node and any node its derivative row reads.
    pub fn stencil_reach(&self) -> usize {
        self.stencil
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let lo = k.abs_diff(row.start);
                let hi = k.abs_diff(row.start + row.weights.len() - 1);
                lo.max(hi)
            })
            .max()
            .unwrap_or(0)
    }

    /// Spacing in the variable the grid is uniform in (`log r` or `r`).
    pub fn step(&self) -> f64 {
        let n = self.len() as f64 - 1.0;
        match self.layout {
            Layout::Logarithmic => (self.r_max() / self.r_min()).ln() / n,
            Layout::Uniform => (self.r_max() - self.r_min()) / n,
        }
    }

    /// `∫ g(r) r dr` over `[r_min, r_max]`.
    pub fn integrate(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    pub fn differentiate(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        Ok(self.apply_stencil(v))
    }

    pub fn differentiate_c(&self, v: &[crate::C64]) -> Result<Vec<crate::C64>> {
        self.check_len(v.len())?;
        Ok(self.apply_stencil(v))
    }

    pub(crate) fn apply_stencil<T>(&self, v: &[T]) -> Vec<T>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        self.stencil
            .iter()
            .map(|row| {
                row.weights
                    .iter()
                    .zip(&v[row.start..row.start + row.weights.len()])
                    .fold(T::default(), |acc, (w, x)| acc + *x * *w)
            })
            .collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return param(format!("profile has {n} samples, grid has {}", self.len()));
        }
        Ok(())
    }

    fn build_stencil(&self) -> Vec<StencilRow> {
        let n = self.len();
        let width = (self.order + 1).min(n);
        let h = self.step();
        let half = width / 2;
        (0..n)
            .map(|k| {
                let start = k.saturating_sub(half).min(n - width);
                let offsets: Vec<f64> = (start..start + width).map(|j| j as f64 - k as f64).collect();
                let mut weights = first_derivative_weights(&offsets);
                let scale = match self.layout {
                    Layout::Logarithmic => 1.0 / (h * self.nodes[k]),
                    Layout::Uniform => 1.0 / h,
                };
                weights.iter_mut().for_each(|w| *w *= scale);
                StencilRow { start, weights }
            })
            .collect()
    }

    /// Piecewise-cubic Lagrange interpolation in the grid variable; constant
    /// extrapolation outside `[r_min, r_max]`.
    pub fn interpolate(&self, v: &[f64], r: f64) -> f64 {
        let n = self.len();
        if r <= self.r_min() {
            return v[0];
        }
        if r >= self.r_max() {
            return v[n - 1];
        }
        if let Ok(k) = self.nodes.binary_search_by(|x| x.total_cmp(&r)) {
            return v[k];
        }
        let x = match self.layout {
            Layout::Logarithmic => (r / self.r_min()).ln() / self.step(),
            Layout::Uniform => (r - self.r_min()) / self.step(),
        };
        let i = (x.floor() as usize).min(n - 2);
        let start = i.saturating_sub(1).min(n.saturating_sub(4));
        let m = (n - start).min(4);
        let mut acc = 0.0;
        for a in 0..m {
            let mut l = 1.0;
            for b in 0..m {
                if a != b {
                    l *= (x - (start + b) as f64) / (a as f64 - b as f64);
                }
            }
            acc += l * v[start + a];
        }
        acc
    }
}

/// Weights of the first-derivative stencil at offset 0 for unit spacing
/// (Fornberg's recursion).
fn first_derivative_weights(offsets: &[f64]) -> Vec<f64> {
    let m = offsets.len();
    let mut c = vec![vec![0.0; 2]; m];
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    c[0][0] = 1.0;
    for i in 1..m {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[1]).collect()
}

/// Integrate `g r dr` exactly for `g` piecewise linear in the grid variable.
fn quadrature_weights(nodes: &[f64], layout: Layout) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let (wa, wb) = match layout {
            Layout::Logarithmic => {
                let h = (b / a).ln();
                let e = a * a;
                let em = (2.0 * h).exp_m1();
                (e * (em - 2.0 * h) / (4.0 * h), e * (2.0 * h * (em + 1.0) - em) / (4.0 * h))
            }
            Layout::Uniform => {
                let h = b - a;
                (h * (2.0 * a + b) / 6.0, h * (a + 2.0 * b) / 6.0)
            }
        };
        w[k] += wa;
        w[k + 1] += wb;
    }
    w
}
