//! Sectional curvature of the plane spanned by two Coulomb-gauged tangent
//! vectors, from the Jost–Peng formula for a flat ambient metric:
//!
//! `R(X,Y,Y,X) = 3⟨G⁰P*_X Y, P*_X Y⟩ + ⟨G²Q_XX, Q_YY⟩ - ⟨G²Q_XY, Q_XY⟩`,
//! `K = R(X,Y,Y,X) / (‖X‖²‖Y‖² - ⟨X,Y⟩²)`.
//!
//! Green forms are evaluated per angular sector with the weak (Galerkin)
//! load of the pointwise products.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::fiducial::FiducialData;
use crate::field::{c, EquivariantField};
use crate::operators::{p_star, q_op};
use crate::painleve::PainleveSolution;
use crate::spectral::{fit_line, sectors_of, Degree, MeshBackground, RadialOperatorMatrix, SectorLayout};
use crate::tangent::{induced_on, limiting_tangent, mesh_background, unit_disk_mesh, HolQuadDiff, TangentVector};

/// Extrapolated `λ(1, i)` with `r_min = 1e-4`, `n = 1200`, `ℓ_max = 8` over
/// `t = 8, 16, 32, 64`.
pub const LAMBDA_ONE_I: f64 = 0.417_933_475_855_015_95;

/// Smallest admissible Gram determinant of the normalized frame.
pub const DEGENERATE_GRAM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSettings {
    pub r_min: f64,
    pub n: usize,
    pub ell_max: u32,
}

impl Default for CurvatureSettings {
    fn default() -> Self {
        CurvatureSettings { r_min: 1e-4, n: 600, ell_max: 8 }
    }
}

impl CurvatureSettings {
    fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < 1.0) || self.n < 8 {
            return param("curvature grid needs 0 < r_min < 1 and at least 8 nodes");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePoint {
    pub t: f64,
    /// `3⟨G⁰P*_X Y, P*_X Y⟩`
    pub term_oneill: f64,
    /// `⟨G²Q_XX, Q_YY⟩`
    pub term_gauss_1: f64,
    /// `⟨G²Q_XY, Q_XY⟩`
    pub term_gauss_2: f64,
    pub gram: f64,
    pub k: f64,
}

impl CurvaturePoint {
    pub fn numerator(&self) -> f64 {
        self.term_oneill + self.term_gauss_1 - self.term_gauss_2
    }

    pub fn t43k(&self) -> f64 {
        self.t.powf(4.0 / 3.0) * self.k
    }
}

/// Green pairings of sector-wise loads, summed over the sectors with
/// twice-charge at most `cap`.
fn degree0_term(bg: &MeshBackground, p: &EquivariantField, cap: u32) -> Result<f64> {
    let charges: Vec<u32> = sectors_of(Degree::Zero, &[p]).into_iter().filter(|&q| q <= cap).collect();
    let vals = charges
        .par_iter()
        .map(|&q| -> Result<f64> {
            let layout = Arc::new(SectorLayout::new(bg.mesh.clone(), Degree::Zero, q));
            if layout.width() == 0 {
                return Ok(0.0);
            }
            let op = RadialOperatorMatrix::assemble(bg, layout)?;
            Ok(op.green_pair(&[p]).1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().sum())
}

/// `(⟨G²a, b⟩, ⟨G²c, c⟩)` summed over degree-2 sectors.
fn degree2_terms(bg: &MeshBackground, a: &[&EquivariantField], b: &[&EquivariantField], cc: &[&EquivariantField], cap: u32) -> Result<(f64, f64)> {
    let mut charges = sectors_of(Degree::Two, a);
    charges.extend(sectors_of(Degree::Two, b));
    charges.extend(sectors_of(Degree::Two, cc));
    let charges: Vec<u32> = charges.into_iter().filter(|&q| q <= cap).collect();
    let vals = charges
        .par_iter()
        .map(|&q| -> Result<(f64, f64)> {
            let layout = Arc::new(SectorLayout::new(bg.mesh.clone(), Degree::Two, q));
            if layout.width() == 0 {
                return Ok((0.0, 0.0));
            }
            let op = RadialOperatorMatrix::assemble(bg, layout.clone())?;
            let (la, lb) = (layout.pair(a), layout.pair(b));
            let xi = op.solve_weak(&la);
            let g1 = lb.iter().zip(&xi).map(|(u, v)| u * v).sum();
            Ok((g1, op.green_pair(cc).1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1)))
}

/// `K` of the plane spanned by two normalized Coulomb-gauged vectors on `bg`.
pub fn curvature_of_frame(bg: &MeshBackground, x: &TangentVector, y: &TangentVector, ell_max: u32) -> Result<CurvaturePoint> {
    let (x, y) = (x.normalize(), y.normalize());
    let cap = 2 * ell_max;
    let (xs, ys) = ((&x.alpha, &x.phi), (&y.alpha, &y.phi));
    let (xx, yy, xy) = (q_op(xs, xs), q_op(ys, ys), q_op(xs, ys));
    let ps = p_star(xs, ys);
    let oneill = degree0_term(bg, &ps, cap)?;
    let (g1, g2) = degree2_terms(bg, &[&xx.0, &xx.1], &[&yy.0, &yy.1], &[&xy.0, &xy.1], cap)?;
    let (nx, ny, ip) = (x.inner(&x), y.inner(&y), x.inner(&y));
    let gram = nx * ny - ip * ip;
    if !(gram >= DEGENERATE_GRAM) {
        return Err(Error::DegeneratePlane(gram));
    }
    let p = CurvaturePoint { t: x.t, term_oneill: 3.0 * oneill, term_gauss_1: g1, term_gauss_2: g2, gram, k: 0.0 };
    Ok(CurvaturePoint { k: p.numerator() / gram, ..p })
}

/// `K(Π(X_t, Y_t))` for `X_t, Y_t` induced by `f1, f2` at the fiducial solution.
pub fn sectional_curvature(sol: &PainleveSolution, f1: &HolQuadDiff, f2: &HolQuadDiff, t: f64, s: &CurvatureSettings) -> Result<CurvaturePoint> {
    s.validate()?;
    let mesh = unit_disk_mesh(s.r_min, s.n)?;
    let (bg, fd) = mesh_background(sol, t, &mesh)?;
    curvature_on(&bg, &fd, f1, f2, s.ell_max)
}

/// [`sectional_curvature`] on a prepared background (`fd` on its quadrature grid).
pub fn curvature_on(bg: &Arc<MeshBackground>, fd: &FiducialData, f1: &HolQuadDiff, f2: &HolQuadDiff, ell_max: u32) -> Result<CurvaturePoint> {
    let x = induced_on(f1, bg.clone(), fd.clone())?.projection.x;
    let y = induced_on(f2, bg.clone(), fd.clone())?.projection.x;
    curvature_of_frame(bg, &x, &y, ell_max)
}

/// `f2 - c f1` with `c` making the limiting frames `L²`-orthogonal.
pub fn orthogonalize(f1: &HolQuadDiff, f2: &HolQuadDiff, s: &CurvatureSettings) -> Result<HolQuadDiff> {
    s.validate()?;
    let mesh = unit_disk_mesh(s.r_min, s.n)?;
    let g = mesh.quad().clone();
    let (a, b) = (limiting_tangent(f1, g.clone(), 1.0), limiting_tangent(f2, g, 1.0));
    let aa = a.inner(&a);
    if aa <= 0.0 {
        return param("first quadratic differential vanishes");
    }
    let k = a.inner(&b) / aa;
    let n = f1.coeffs.len().max(f2.coeffs.len());
    let get = |f: &HolQuadDiff, i: usize| f.coeffs.get(i).copied().unwrap_or_default();
    HolQuadDiff::new((0..n).map(|i| get(f2, i) - get(f1, i) * k).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub points: Vec<CurvaturePoint>,
    /// Second vector after orthogonalization.
    pub f2: HolQuadDiff,
    /// Fitted `d log|K| / d log t`.
    pub slope: f64,
    /// Fitted `d log|R(X,Y,Y,X)| / d log t`.
    pub numerator_slope: f64,
    /// `lim t^{4/3} R(X,Y,Y,X)`: homogeneous of degree 2 in each argument.
    pub lambda: f64,
    /// `lim t^{4/3} K`.
    pub lambda_k: f64,
    pub sign_change: bool,
}

/// Intercept of `g(t) = λ(1 + c t^{-1/3})`, least squares in `t^{-1/3}`.
pub fn richardson(ts: &[f64], g: &[f64]) -> f64 {
    let s: Vec<f64> = ts.iter().map(|t| t.powf(-1.0 / 3.0)).collect();
    let n = s.len() as f64;
    let (ms, mg) = (s.iter().sum::<f64>() / n, g.iter().sum::<f64>() / n);
    let sxx: f64 = s.iter().map(|x| (x - ms) * (x - ms)).sum();
    let sxy: f64 = s.iter().zip(g).map(|(x, y)| (x - ms) * (y - mg)).sum();
    mg - sxy / sxx * ms
}

fn check_sweep(ts: &[f64]) -> Result<()> {
    if ts.len() < 2 || ts.windows(2).any(|w| !(w[1] > w[0])) || ts[0] <= 0.0 {
        return param("t-list must be positive and strictly increasing with at least two entries");
    }
    Ok(())
}

/// Curvature at each `t` on one shared mesh.
pub fn curvature_sweep(sol: &PainleveSolution, f1: &HolQuadDiff, f2: &HolQuadDiff, ts: &[f64], s: &CurvatureSettings) -> Result<Vec<CurvaturePoint>> {
    check_sweep(ts)?;
    s.validate()?;
    let mesh = unit_disk_mesh(s.r_min, s.n)?;
    ts.par_iter()
        .map(|&t| {
            let (bg, fd) = mesh_background(sol, t, &mesh)?;
            curvature_on(&bg, &fd, f1, f2, s.ell_max)
        })
        .collect()
}

pub fn scan_and_fit(sol: &PainleveSolution, f1: &HolQuadDiff, f2: &HolQuadDiff, ts: &[f64], s: &CurvatureSettings) -> Result<LambdaEstimate> {
    let f2 = orthogonalize(f1, f2, s)?;
    let points = curvature_sweep(sol, f1, &f2, ts, s)?;
    Ok(estimate(points, f2))
}

fn estimate(points: Vec<CurvaturePoint>, f2: HolQuadDiff) -> LambdaEstimate {
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let fit = |v: Vec<f64>| fit_line(&lt, &v.iter().map(|x| x.abs().ln()).collect::<Vec<_>>()).0;
    let t43 = |v: f64, t: f64| t.powf(4.0 / 3.0) * v;
    let sign_change = points.windows(2).any(|w| w[0].k.signum() != w[1].k.signum());
    LambdaEstimate {
        slope: fit(points.iter().map(|p| p.k).collect()),
        numerator_slope: fit(points.iter().map(|p| p.numerator()).collect()),
        lambda: richardson(&ts, &points.iter().map(|p| t43(p.numerator(), p.t)).collect::<Vec<_>>()),
        lambda_k: richardson(&ts, &points.iter().map(|p| t43(p.k, p.t)).collect::<Vec<_>>()),
        sign_change,
        points,
        f2,
    }
}

/// Comparison of `t^{4/3} R(X,Y,Y,X)` with its value for the constant terms
/// of `f1, f2` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalityReport {
    pub ts: Vec<f64>,
    pub full: Vec<f64>,
    pub constant: Vec<f64>,
    pub rel_diff: Vec<f64>,
    /// Fitted slope of `log rel_diff`; `None` when the inputs are already constant.
    pub slope: Option<f64>,
}

pub fn lambda_locality_check(sol: &PainleveSolution, f1: &HolQuadDiff, f2: &HolQuadDiff, ts: &[f64], s: &CurvatureSettings) -> Result<LocalityReport> {
    let c0 = |f: &HolQuadDiff| HolQuadDiff { coeffs: vec![f.at_zero()] };
    let (g1, g2) = (c0(f1), c0(f2));
    let full = curvature_sweep(sol, f1, f2, ts, s)?;
    let cst = if g1.coeffs == f1.coeffs && g2.coeffs == f2.coeffs { full.clone() } else { curvature_sweep(sol, &g1, &g2, ts, s)? };
    let v = |p: &CurvaturePoint| p.t.powf(4.0 / 3.0) * p.numerator();
    let full: Vec<f64> = full.iter().map(v).collect();
    let constant: Vec<f64> = cst.iter().map(v).collect();
    let rel_diff: Vec<f64> = full.iter().zip(&constant).map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)).collect();
    let slope = if rel_diff.iter().all(|d| *d > 0.0) {
        let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        Some(fit_line(&lt, &rel_diff.iter().map(|d| d.ln()).collect::<Vec<_>>()).0)
    } else {
        None
    };
    Ok(LocalityReport { ts: ts.to_vec(), full, constant, rel_diff, slope })
}

/// `f = a + b i` as a constant quadratic differential.
pub fn constant(a: f64, b: f64) -> HolQuadDiff {
    HolQuadDiff { coeffs: vec![c(a, b)] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FormAlgebra;
    use crate::painleve::default_solution;

    fn small() -> CurvatureSettings {
        CurvatureSettings { r_min: 1e-4, n: 160, ell_max: 8 }
    }

    #[test]
    fn q_is_symmetric() {
        let mesh = unit_disk_mesh(1e-3, 100).unwrap();
        let (bg, fd) = mesh_background(default_solution(), 4.0, &mesh).unwrap();
        let x = induced_on(&constant(1.0, 0.3), bg.clone(), fd.clone()).unwrap().projection.x;
        let y = induced_on(&HolQuadDiff::new(vec![c(0.2, -1.0), c(0.5, 0.0)]).unwrap(), bg, fd).unwrap().projection.x;
        let (a, b) = (q_op((&x.alpha, &x.phi), (&y.alpha, &y.phi)), q_op((&y.alpha, &y.phi), (&x.alpha, &x.phi)));
        let d = a.0.sub(&b.0).max_abs() + a.1.sub(&b.1).max_abs();
        assert!(d <= 1e-10 * (a.0.max_abs() + a.1.max_abs()), "{d}");
    }

    #[test]
    fn terms_are_nonnegative_and_swap_invariant() {
        let s = small();
        let (f1, f2) = (constant(1.0, 0.0), constant(0.0, 1.0));
        let p = sectional_curvature(default_solution(), &f1, &f2, 8.0, &s).unwrap();
        let q = sectional_curvature(default_solution(), &f2, &f1, 8.0, &s).unwrap();
        assert!(p.term_oneill >= 0.0 && p.term_gauss_2 >= 0.0, "{p:?}");
        assert!((p.k - q.k).abs() <= 1e-9 * p.k.abs(), "{p:?} {q:?}");
        assert!((p.k - p.numerator() / p.gram).abs() <= 1e-15 * p.k.abs());
    }

    #[test]
    fn equal_vectors_span_no_plane() {
        let f = constant(1.0, 0.0);
        let e = sectional_curvature(default_solution(), &f, &f, 8.0, &small());
        assert!(matches!(e, Err(Error::DegeneratePlane(_))), "{e:?}");
    }

    #[test]
    fn curvature_depends_only_on_the_plane() {
        let mesh = unit_disk_mesh(1e-4, 160).unwrap();
        let (bg, fd) = mesh_background(default_solution(), 8.0, &mesh).unwrap();
        let x = induced_on(&constant(1.0, 0.0), bg.clone(), fd.clone()).unwrap().projection.x;
        let y = induced_on(&constant(0.0, 1.0), bg.clone(), fd).unwrap().projection.x;
        let y2 = TangentVector { phi: y.phi.add(&x.phi.scale(c(0.7, 0.0))), alpha: y.alpha.add(&x.alpha.scale(c(0.7, 0.0))), ..y.clone() };
        let a = curvature_of_frame(&bg, &x, &y, 8).unwrap();
        let b = curvature_of_frame(&bg, &x, &y2, 8).unwrap();
        assert!((a.k - b.k).abs() < 1e-9 * a.k.abs(), "{a:?} {b:?}");
    }

    #[test]
    fn orthogonalization_makes_limiting_frames_orthogonal() {
        let s = small();
        let f1 = HolQuadDiff::new(vec![c(1.0, 0.0), c(0.3, 0.0)]).unwrap();
        let f2 = orthogonalize(&f1, &constant(1.0, 1.0), &s).unwrap();
        let g = unit_disk_mesh(s.r_min, s.n).unwrap().quad().clone();
        let (a, b) = (limiting_tangent(&f1, g.clone(), 1.0), limiting_tangent(&f2, g, 1.0));
        assert!(a.inner(&b).abs() < 1e-12 * a.norm() * b.norm());
        // i f is already orthogonal to f
        let h = orthogonalize(&constant(1.0, 0.0), &constant(0.0, 1.0), &s).unwrap();
        assert_eq!(h.coeffs, constant(0.0, 1.0).coeffs);
    }

    #[test]
    fn richardson_recovers_the_model_limit() {
        let ts = [8.0, 16.0, 32.0, 64.0];
        let g: Vec<f64> = ts.iter().map(|t: &f64| 2.5 * (1.0 - 0.8 * t.powf(-1.0 / 3.0))).collect();
        assert!((richardson(&ts, &g) - 2.5).abs() < 1e-12);
    }

    const TS: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

    fn slope(ts: &[f64], v: impl Iterator<Item = f64>) -> f64 {
        let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        fit_line(&lt, &v.map(|x| x.abs().ln()).collect::<Vec<_>>()).0
    }

    #[test]
    fn each_term_decays_like_t_to_minus_four_thirds() {
        let e = scan_and_fit(default_solution(), &constant(1.0, 0.0), &constant(0.0, 1.0), &TS, &small()).unwrap();
        let p = &e.points;
        for (name, v) in [
            ("oneill", p.iter().map(|p| p.term_oneill).collect::<Vec<_>>()),
            ("gauss_1", p.iter().map(|p| p.term_gauss_1).collect()),
            ("gauss_2", p.iter().map(|p| p.term_gauss_2).collect()),
        ] {
            let s = slope(&TS, v.into_iter());
            assert!(s <= -4.0 / 3.0 + 0.15, "{name}: {s}");
        }
        // the normalized frame becomes orthogonal with |X_∞|² = 2π
        let lim = (2.0 * std::f64::consts::PI).powi(2);
        assert!(slope(&TS, p.iter().map(|p| p.gram - lim)) <= -1.0 / 3.0 + 0.1);
    }

    #[test]
    fn lambda_is_quadratic_in_each_slot() {
        let s = small();
        let base = scan_and_fit(default_solution(), &constant(1.0, 0.0), &constant(0.0, 1.0), &TS, &s).unwrap();
        for c in [2.0, 3.0] {
            let e = scan_and_fit(default_solution(), &constant(c, 0.0), &constant(0.0, 1.0), &TS, &s).unwrap();
            assert!((e.lambda - c * c * base.lambda).abs() < 1e-9 * base.lambda.abs(), "{c}");
        }
    }

    #[test]
    fn frozen_lambda_at_default_resolution() {
        let e = scan_and_fit(default_solution(), &constant(1.0, 0.0), &constant(0.0, 1.0), &TS, &CurvatureSettings::default()).unwrap();
        assert!((e.lambda / LAMBDA_ONE_I - 1.0).abs() < 1e-3, "{}", e.lambda);
        let twelve = CurvatureSettings { ell_max: 12, ..Default::default() };
        let f = scan_and_fit(default_solution(), &constant(1.0, 0.0), &constant(0.0, 1.0), &TS, &twelve).unwrap();
        assert!((f.lambda / e.lambda - 1.0).abs() < 0.01);
    }

    #[test]
    fn higher_taylor_coefficients_fade() {
        let s = small();
        let f1 = HolQuadDiff::real(&[1.0, 0.5]).unwrap();
        let r = lambda_locality_check(default_solution(), &f1, &constant(0.0, 1.0), &TS, &s).unwrap();
        assert!(r.slope.unwrap() <= -1.0 / 3.0, "{r:?}");
        let same = lambda_locality_check(default_solution(), &constant(1.0, 0.0), &constant(0.0, 1.0), &TS, &s).unwrap();
        assert!(same.slope.is_none() && same.rel_diff.iter().all(|d| *d == 0.0));
    }
}
