//! Complex radial profiles, optionally carrying exact r-derivatives.

use crate::grid::RadialGrid;
use crate::C64;

/// `levels[k][i]` is the k-th r-derivative at node `i`. Derivatives beyond the
/// stored depth are obtained from the grid differentiator.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    levels: Vec<Vec<C64>>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl Profile {
    pub fn new(values: Vec<C64>) -> Self {
        Profile { levels: vec![values] }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Profile::new(values.iter().map(|v| C64::new(*v, 0.0)).collect())
    }

    /// Profile with exact derivatives: `levels[0]` values, `levels[1]` first derivative, ...
    pub fn with_jets(levels: Vec<Vec<C64>>) -> Self {
        assert!(!levels.is_empty());
        Profile { levels }
    }

    pub fn zeros(n: usize, depth: usize) -> Self {
        Profile { levels: vec![vec![C64::new(0.0, 0.0); n]; depth.max(1)] }
    }

    pub fn constant(n: usize, c: C64, depth: usize) -> Self {
        let mut p = Profile::zeros(n, depth);
        p.levels[0].iter_mut().for_each(|v| *v = c);
        p
    }

    /// Real function of r with `depth` exact derivatives supplied by `f(r) -> [v, v', v'', ...]`.
    pub fn from_fn<F: Fn(f64) -> [f64; 3]>(grid: &RadialGrid, depth: usize, f: F) -> Self {
        let depth = depth.clamp(1, 3);
        let mut levels = vec![Vec::with_capacity(grid.len()); depth];
        for &r in grid.nodes() {
            let v = f(r);
            for (k, l) in levels.iter_mut().enumerate() {
                l.push(C64::new(v[k], 0.0));
            }
        }
        Profile { levels }
    }

    /// `r^p` with `depth` exact derivatives.
    pub fn rpow(grid: &RadialGrid, p: f64, depth: usize) -> Self {
        Profile::from_fn(grid, depth, |r| {
            let v = r.powf(p);
            [v, p * v / r, p * (p - 1.0) * v / (r * r)]
        })
    }

    pub fn len(&self) -> usize {
        self.levels[0].len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn depth(&self) -> usize {
        self.levels.len()
    }
    pub fn values(&self) -> &[C64] {
        &self.levels[0]
    }
    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.levels[0]
    }
    pub fn level(&self, k: usize) -> Option<&[C64]> {
        self.levels.get(k).map(|v| v.as_slice())
    }

    pub fn truncate(&self, depth: usize) -> Self {
        Profile { levels: self.levels[..depth.clamp(1, self.depth())].to_vec() }
    }

    pub fn add(&self, o: &Profile) -> Profile {
        let d = self.depth().min(o.depth());
        let levels = (0..d)
            .map(|k| self.levels[k].iter().zip(&o.levels[k]).map(|(a, b)| a + b).collect())
            .collect();
        Profile { levels }
    }

    pub fn add_assign(&mut self, o: &Profile) {
        let d = self.depth().min(o.depth());
        self.levels.truncate(d);
        for k in 0..d {
            self.levels[k].iter_mut().zip(&o.levels[k]).for_each(|(a, b)| *a += b);
        }
    }

    pub fn scale(&self, c: C64) -> Profile {
        Profile { levels: self.levels.iter().map(|l| l.iter().map(|v| v * c).collect()).collect() }
    }

    pub fn conj(&self) -> Profile {
        Profile { levels: self.levels.iter().map(|l| l.iter().map(|v| v.conj()).collect()).collect() }
    }

    /// Pointwise product, Leibniz rule on the common depth.
    pub fn mul(&self, o: &Profile) -> Profile {
        let d = self.depth().min(o.depth());
        let n = self.len();
        let mut levels = vec![vec![C64::new(0.0, 0.0); n]; d];
        for (k, out) in levels.iter_mut().enumerate() {
            for j in 0..=k {
                let c = binomial(k, j);
                let (a, b) = (&self.levels[j], &o.levels[k - j]);
                for i in 0..n {
                    out[i] += a[i] * b[i] * c;
                }
            }
        }
        Profile { levels }
    }

    /// d/dr; exact when a derivative level is stored.
    pub fn deriv(&self, grid: &RadialGrid) -> Profile {
        if self.depth() >= 2 {
            Profile { levels: self.levels[1..].to_vec() }
        } else {
            Profile::new(grid.apply_stencil(&self.levels[0]))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.levels[0].iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.levels[0].iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_log_grid;

    #[test]
    fn leibniz_matches_direct_jets() {
        let g = make_log_grid(0.1, 2.0, 20).unwrap();
        let a = Profile::rpow(&g, 1.5, 3);
        let b = Profile::rpow(&g, -0.5, 3);
        let ab = a.mul(&b);
        let direct = Profile::rpow(&g, 1.0, 3);
        for k in 0..3 {
            for (x, y) in ab.level(k).unwrap().iter().zip(direct.level(k).unwrap()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_falls_back_to_stencil() {
        let g = make_log_grid(0.1, 2.0, 400).unwrap();
        let p = Profile::rpow(&g, 2.0, 1);
        let d = p.deriv(&g);
        assert_eq!(d.depth(), 1);
        for (x, r) in d.values().iter().zip(g.nodes()) {
            assert!((x.re - 2.0 * r).abs() < 1e-3 * r);
        }
        let exact = Profile::rpow(&g, 2.0, 2).deriv(&g);
        assert!((exact.values()[5].re - 2.0 * g.nodes()[5]).abs() < 1e-14);
    }
}
