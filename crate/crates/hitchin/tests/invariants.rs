use std::sync::{Arc, OnceLock};

use hitchin::curvature::{curvature_on, richardson};
use hitchin::fiducial::{build_fiducial, FiducialData};
use hitchin::grid::make_log_grid;
use hitchin::painleve::default_solution;
use hitchin::spectral::MeshBackground;
use hitchin::tangent::{corrected_tangent, mesh_background, unit_disk_mesh, HolQuadDiff};
use hitchin::C64;
use proptest::prelude::*;

fn fiducial(t: f64) -> FiducialData {
    let g = Arc::new(make_log_grid(1e-4, 1.0, 200).unwrap());
    build_fiducial(default_solution(), t, g).unwrap()
}

fn background() -> &'static (Arc<MeshBackground>, FiducialData) {
    static BG: OnceLock<(Arc<MeshBackground>, FiducialData)> = OnceLock::new();
    BG.get_or_init(|| {
        let mesh = unit_disk_mesh(1e-3, 160).unwrap();
        mesh_background(default_solution(), 12.0, &mesh).unwrap()
    })
}

fn quad() -> impl Strategy<Value = HolQuadDiff> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..4)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.hypot(*b) > 0.1))
        .prop_map(|v| HolQuadDiff::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

fn combine(a: f64, f: &HolQuadDiff, b: f64, g: &HolQuadDiff) -> HolQuadDiff {
    let n = f.coeffs.len().max(g.coeffs.len());
    let at = |q: &HolQuadDiff, k: usize| q.coeffs.get(k).copied().unwrap_or_default();
    HolQuadDiff::new((0..n).map(|k| at(f, k) * a + at(g, k) * b).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tangent_is_real_linear_in_the_differential(f in quad(), g in quad(), a in -3.0f64..3.0, b in -3.0f64..3.0, t in 1.0f64..40.0) {
        let fd = fiducial(t);
        let lhs = corrected_tangent(&combine(a, &f, b, &g), &fd);
        let rhs_f = corrected_tangent(&f, &fd).scale(a);
        let rhs_g = corrected_tangent(&g, &fd).scale(b);
        let diff = lhs.sub(&rhs_f).sub(&rhs_g).norm();
        let size = lhs.norm() + rhs_f.norm() + rhs_g.norm();
        prop_assert!(diff <= 1e-12 * size.max(1.0), "diff {diff:e}, size {size:e}");
    }

    #[test]
    fn richardson_recovers_the_limit_of_the_model(lambda in -5.0f64..5.0, c in -3.0f64..3.0, t0 in 2.0f64..10.0) {
        let ts: Vec<f64> = (0..4).map(|k| t0 * 2f64.powi(k)).collect();
        let g: Vec<f64> = ts.iter().map(|t| lambda * (1.0 + c * t.powf(-1.0 / 3.0))).collect();
        prop_assert!((richardson(&ts, &g) - lambda).abs() <= 1e-10 * (1.0 + lambda.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sectional_curvature_depends_only_on_the_plane(a in 0.3f64..3.0, b in 0.3f64..3.0, mix in -1.0f64..1.0) {
        let (bg, fd) = background();
        let f1 = HolQuadDiff::new(vec![C64::new(1.0, 0.0), C64::new(0.3, 0.0)]).unwrap();
        let f2 = HolQuadDiff::new(vec![C64::new(0.0, 1.0)]).unwrap();
        let base = curvature_on(bg, fd, &f1, &f2, 3).unwrap();
        let scaled = curvature_on(bg, fd, &f1.scale(a), &f2.scale(-b), 3).unwrap();
        let swapped = curvature_on(bg, fd, &f2, &f1, 3).unwrap();
        let sheared = curvature_on(bg, fd, &f1, &combine(1.0, &f2, mix, &f1), 3).unwrap();
        let tol = 1e-8 * base.k.abs().max(1e-12);
        prop_assert!((scaled.k - base.k).abs() <= tol, "{} vs {}", scaled.k, base.k);
        prop_assert!((swapped.k - base.k).abs() <= tol, "{} vs {}", swapped.k, base.k);
        prop_assert!((sheared.k - base.k).abs() <= tol, "{} vs {}", sheared.k, base.k);
        // the numerator is homogeneous of degree two in each slot
        prop_assert!((scaled.numerator() - a * a * b * b * base.numerator()).abs() <= 1e-8 * scaled.numerator().abs());
    }
}
