//! The ten end-to-end checks with their pinned tolerances. Each runner
//! measures, compares and reports; none of them panics on a failed
//! comparison.

use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::curvature::{constant, lambda_locality_check, scan_and_fit, CurvatureSettings};
use crate::error::Result;
use crate::fiducial::{build_fiducial, check_fiducial_bounds};
use crate::field::{c, EquivariantField, Form, FormAlgebra, Key, Profile, Slot};
use crate::grid::{make_log_grid, RadialGrid};
use crate::operators::Background;
use crate::painleve::{default_solution, solve_painleve, DEFAULT_N, DEFAULT_RHO_MAX, DEFAULT_RHO_MIN};
use crate::spectral::{
    annulus_source_solution, check_subharmonic, composition_deviation, eigen_scaling, green_uniformity, homogeneous_decay_rate,
    mode_leakage, model_solution_scaling, DecayKind, DecaySettings, Degree, Mesh, ModelGrid, SectorLayout, Sign, Subspace,
};
use crate::tangent::{horizontal_convergence, HolQuadDiff};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Full,
    /// Coarser grids and shorter sweeps, for a quick self-test.
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {} ({:.1} s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

pub const NAMES: [&str; 10] = [
    "painleve consistency",
    "fiducial bounds sweep",
    "eigenvalue scaling",
    "homogeneous decay rates",
    "green uniformity",
    "model-solution scaling",
    "coulomb-gauge convergence",
    "curvature asymptotics",
    "structural oracles",
    "subharmonicity",
];

/// Run one criterion (1-based). Errors inside a runner count as failures.
pub fn run_criterion(id: u8, level: Level) -> CriterionResult {
    let start = Instant::now();
    let out = match id {
        1 => painleve(level),
        2 => fiducial(level),
        3 => eigen(level),
        4 => decay(level),
        5 => green(level),
        6 => model(level),
        7 => coulomb(level),
        8 => curvature(level),
        9 => structural(level),
        10 => subharmonic(level),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
    let name = NAMES.get(usize::from(id).wrapping_sub(1)).copied().unwrap_or("unknown");
    CriterionResult { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all(level: Level) -> Vec<CriterionResult> {
    (1..=10).map(|id| run_criterion(id, level)).collect()
}

type Outcome = Result<(bool, String)>;

fn painleve(level: Level) -> Outcome {
    let n = match level {
        Level::Full => DEFAULT_N,
        Level::Reduced => DEFAULT_N / 2,
    };
    let sol = solve_painleve(DEFAULT_RHO_MIN, DEFAULT_RHO_MAX, n, 1e-10)?;
    let mono = sol.is_positive_decreasing();
    let res = sol.ode_residual(6)?;
    let k0 = sol.k0_ratio_deviation(5.0, 10.0);
    let ok = mono && res <= 1e-8 && k0 <= 0.05;
    Ok((ok, format!("positive decreasing {mono}, ode residual {res:.2e} (<= 1e-8), max |psi/K0 - 1| on [5,10] {k0:.4} (<= 0.05)")))
}

fn fiducial(level: Level) -> Outcome {
    let n = if level == Level::Full { 600 } else { 300 };
    let g = Arc::new(make_log_grid(1e-5, 1.0, n)?);
    let sweep = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .par_iter()
        .map(|&t| build_fiducial(default_solution(), t, g.clone()))
        .collect::<Result<Vec<_>>>()?;
    let rep = check_fiducial_bounds(&sweep)?;
    let ok = rep.clause_i && rep.iii_variation < 0.2 && rep.v_variation < 0.2;
    Ok((
        ok,
        format!(
            "f in [0, 1/8] {}, sup r^-2 f / t^(4/3) variation {:.4} (< 0.2), sup r^(1/2) e^(+-h) variation {:.4} (< 0.2)",
            rep.clause_i, rep.iii_variation, rep.v_variation
        ),
    ))
}

fn eigen(level: Level) -> Outcome {
    let (ts, n): (&[f64], usize) = match level {
        Level::Full => (&[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], 300),
        Level::Reduced => (&[1.0, 4.0, 16.0], 120),
    };
    let reps = [0u32, 1, 2]
        .par_iter()
        .map(|&ell| eigen_scaling(default_solution(), ell, Sign::Plus, ts, 1.0, 1e-3, n))
        .collect::<Result<Vec<_>>>()?;
    let ok = reps.iter().all(|r| (r.exponent - 4.0 / 3.0).abs() <= 0.05);
    let ex: Vec<String> = reps.iter().map(|r| format!("l={}: {:.6}", r.ell, r.exponent)).collect();
    Ok((ok, format!("exponents {} (4/3 +- 0.05)", ex.join(", "))))
}

fn decay(level: Level) -> Outcome {
    let s = match level {
        Level::Full => DecaySettings::default(),
        Level::Reduced => DecaySettings { density: 60.0, ..Default::default() },
    };
    let mut worst = 0.0f64;
    let mut count = 0;
    for ell in 0..=6u32 {
        for f in homogeneous_decay_rate(ell, Sign::Plus, Subspace::Parallel, &s)? {
            let DecayKind::Power { slope } = f.kind else { continue };
            // σ_n decays like r^{-|n - 1/2|}
            let want = -(f.branch_index as f64 - 0.5).abs();
            worst = worst.max((slope - want).abs());
            count += 1;
        }
    }
    let rates = (1..=6u32)
        .into_par_iter()
        .map(|ell| homogeneous_decay_rate(ell, Sign::Plus, Subspace::Perpendicular, &s))
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<f64> = rates
        .iter()
        .filter_map(|v| match v.first()?.kind {
            DecayKind::Exponential { rate } => Some(rate),
            _ => None,
        })
        .collect();
    let (lo, hi) = rates.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    let spread = hi / lo - 1.0;
    let ok = count >= 13 && worst <= 1e-2 && rates.len() == 6 && spread <= 0.1;
    Ok((ok, format!("{count} power-law branches, worst slope error {worst:.2e} (<= 1e-2); perpendicular rates {lo:.4}..{hi:.4}, spread {spread:.4} (<= 0.1)")))
}

fn green(level: Level) -> Outcome {
    let (ell_max, n) = if level == Level::Full { (8, 300) } else { (4, 120) };
    let rep = green_uniformity(default_solution(), &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], ell_max, 1e-3, n)?;
    let r = rep.ratio();
    let v: Vec<String> = rep.inverse_lambda.iter().map(|x| format!("{x:.4}")).collect();
    Ok((r < 3.0, format!("1/lambda_min over t = 1..32: [{}], max/min {r:.4} (< 3)", v.join(", "))))
}

fn model(level: Level) -> Outcome {
    let grid = if level == Level::Full { ModelGrid::default() } else { ModelGrid { inner_steps: 120, per_octave: 12 } };
    let reps = [0u32, 1, 2]
        .par_iter()
        .map(|&ell| model_solution_scaling(default_solution(), ell, Sign::Plus, &[0, 1, 2, 3], 0.25, grid, 2))
        .collect::<Result<Vec<_>>>()?;
    let ok = reps.iter().all(|r| r.collapse < 0.05 && r.remainder_slope <= -5.0 / 3.0 + 0.15);
    let d: Vec<String> = reps.iter().enumerate().map(|(l, r)| format!("l={l}: collapse {:.2e}, slope {:.3}", r.collapse, r.remainder_slope)).collect();
    Ok((ok, format!("{} (collapse < 0.05, slope <= -1.517)", d.join("; "))))
}

fn coulomb(level: Level) -> Outcome {
    let (r_min, n) = if level == Level::Full { (1e-5, 600) } else { (1e-4, 300) };
    let q = HolQuadDiff::real(&[1.0])?;
    let rep = horizontal_convergence(default_solution(), &q, &[8.0, 16.0, 32.0, 64.0], r_min, n)?;
    let ok = rep.slope <= -1.0 / 3.0 + 0.1;
    Ok((ok, format!("slope of |X_t - (0, phi_inf)| {:.4} (<= -0.2333)", rep.slope)))
}

fn curvature(level: Level) -> Outcome {
    let s = match level {
        Level::Full => CurvatureSettings::default(),
        Level::Reduced => CurvatureSettings { n: 200, ..Default::default() },
    };
    let ts = [8.0, 16.0, 32.0, 64.0];
    let sol = default_solution();
    let pairs = [
        (constant(1.0, 0.0), constant(0.0, 1.0)),
        (HolQuadDiff::new(vec![c(1.0, 0.0), c(0.5, 0.0)])?, HolQuadDiff::new(vec![c(0.3, 1.0), c(0.0, 0.0), c(-0.4, 0.2)])?),
    ];
    let fits = pairs.par_iter().map(|(a, b)| scan_and_fit(sol, a, b, &ts, &s)).collect::<Result<Vec<_>>>()?;
    let slopes_ok = fits.iter().all(|e| (e.slope + 4.0 / 3.0).abs() <= 0.1);
    let base = &fits[0];
    let mut multi = 0.0f64;
    for k in [2.0, 3.0] {
        let e = scan_and_fit(sol, &constant(k, 0.0), &constant(0.0, 1.0), &ts, &s)?;
        multi = multi.max((e.lambda / (k * k * base.lambda) - 1.0).abs());
    }
    let loc = lambda_locality_check(sol, &pairs[1].0, &constant(0.0, 1.0), &ts, &s)?;
    let loc_slope = loc.slope.unwrap_or(f64::NEG_INFINITY);
    let ok = slopes_ok && multi <= 0.01 && loc_slope <= -1.0 / 3.0;
    Ok((
        ok,
        format!(
            "log|K| slopes {:.4}, {:.4} (-4/3 +- 0.1); multilinearity deviation {multi:.2e} (<= 1e-2); locality slope {loc_slope:.3} (<= -1/3)",
            fits[0].slope, fits[1].slope
        ),
    ))
}

/// Smooth bump `z (1 + s r) ((r - a)(b - r))^4` on `[a, b]` with exact jets.
fn bump(g: &RadialGrid, shift: f64, z: C64) -> Profile {
    let (a, b) = (g.r_min(), g.r_max());
    let scale = (4.0 / ((b - a) * (b - a))).powi(4);
    Profile::from_fn(g, 3, |r| {
        let u = (r - a) * (b - r);
        let w = 1.0 + shift * r;
        let du = (b - r) - (r - a);
        let v = u.powi(4) * w;
        let dv = 4.0 * u.powi(3) * du * w + u.powi(4) * shift;
        let ddv = 12.0 * u * u * du * du * w - 8.0 * u.powi(3) * w + 8.0 * u.powi(3) * du * shift;
        [v * scale, dv * scale, ddv * scale]
    })
    .scale(z)
}

/// Random smooth fields with angular indices in `-3..=3`.
pub struct FieldSampler {
    rng: StdRng,
    grid: Arc<RadialGrid>,
}

impl FieldSampler {
    pub fn new(grid: Arc<RadialGrid>, seed: u64) -> Self {
        FieldSampler { rng: StdRng::seed_from_u64(seed), grid }
    }

    fn z(&mut self) -> C64 {
        c(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))
    }

    fn raw(&mut self, form: Form, traceless: bool) -> EquivariantField {
        let mut f = EquivariantField::zero(self.grid.clone());
        for _ in 0..4 {
            let n = self.rng.gen_range(-3..=3);
            let (shift, z) = (self.rng.gen_range(-0.8..0.8), self.z());
            let p = bump(&self.grid, shift, z);
            match self.rng.gen_range(0..3) {
                0 => f.add_term(Key::new(Slot::S12, form, n), p),
                1 => f.add_term(Key::new(Slot::S21, form, n), p),
                _ => {
                    f.add_term(Key::new(Slot::S11, form, n), p.clone());
                    f.add_term(Key::new(Slot::S22, form, n), p.scale(c(if traceless { -1.0 } else { 1.0 }, 0.0)));
                }
            }
        }
        f
    }

    /// `su(2)`-valued `form`.
    pub fn su(&mut self, form: Form) -> EquivariantField {
        let f = self.raw(form, true);
        f.sub(&f.adjoint())
    }

    /// `sl(2)`-valued `form`.
    pub fn sl(&mut self, form: Form) -> EquivariantField {
        self.raw(form, true)
    }

    pub fn su_one_form(&mut self) -> EquivariantField {
        let f = self.raw(Form::Dzbar, true);
        f.sub(&f.adjoint())
    }

    pub fn t(&mut self) -> f64 {
        self.rng.gen_range(1.0..16.0)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Largest relative defect of `⟨iγ, v⟩ = ⟨γ, i*v⟩` and `⟨Lv, w⟩ = ⟨v, L*w⟩`
/// over `count` random tuples.
pub fn adjointness_defects(count: usize, seed: u64, n: usize) -> Result<(f64, f64)> {
    let g = Arc::new(make_log_grid(0.05, 1.0, n)?);
    let mut s = FieldSampler::new(g.clone(), seed);
    let mut cases = Vec::with_capacity(count);
    for _ in 0..count {
        let t = s.t();
        cases.push((t, s.su(Form::Function), s.su_one_form(), s.sl(Form::Dz), s.su(Form::DzDzbar), s.sl(Form::DzDzbar)));
    }
    let sol = default_solution();
    let out = cases
        .par_iter()
        .map(|(t, gamma, al, ph, mu, si)| -> Result<(f64, f64)> {
            let bg = Background::from_fiducial(&build_fiducial(sol, *t, g.clone())?);
            let (ia, ip) = bg.i_op(gamma);
            let e0 = rel(ia.inner(al) + ip.inner(ph), gamma.inner(&bg.i_star(al, ph)));
            let (lm, ls) = bg.l_op(al, ph);
            let (sa, sp) = bg.l_star(mu, si);
            let e2 = rel(lm.inner(mu) + ls.inner(si), al.inner(&sa) + ph.inner(&sp));
            Ok((e0, e2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out.iter().fold((0.0f64, 0.0f64), |a, v| (a.0.max(v.0), a.1.max(v.1))))
}

fn structural(level: Level) -> Outcome {
    let (count, n) = if level == Level::Full { (100, 300) } else { (20, 200) };
    let (adj_i, adj_l) = adjointness_defects(count, 0x5eed, n)?;
    let g = Arc::new(make_log_grid(0.02, 1.0, 40)?);
    let comp = [1.0, 4.0]
        .iter()
        .map(|&t| -> Result<f64> {
            let fd = build_fiducial(default_solution(), t, g.clone())?;
            Ok((0..=8).map(|ell| composition_deviation(&fd, ell)).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let lg = Arc::new(make_log_grid(0.05, 1.0, 24)?);
    let mesh = Arc::new(Mesh::new(lg.clone())?);
    let bg = Background::from_fiducial(&build_fiducial(default_solution(), 2.0, lg)?);
    let mut leak = 0.0f64;
    for deg in [Degree::Zero, Degree::Two] {
        for q in 0..=8 {
            let l = SectorLayout::new(mesh.clone(), deg, q);
            if l.width() == 0 {
                continue;
            }
            let x: Vec<f64> = (0..l.num_dofs()).map(|i| (0.37 * i as f64 + q as f64).sin()).collect();
            leak = leak.max(mode_leakage(&bg, &l, &x, 48).leakage);
        }
    }
    let ok = adj_i <= 1e-8 && adj_l <= 1e-8 && comp <= 1e-6 && leak <= 1e-8;
    Ok((
        ok,
        format!("{count} random tuples: i/i* defect {adj_i:.2e}, L/L* defect {adj_l:.2e} (<= 1e-8); closed-form D2 vs L L* {comp:.2e} (<= 1e-6); leakage {leak:.2e} (<= 1e-8)"),
    ))
}

fn subharmonic(level: Level) -> Outcome {
    let n = if level == Level::Full { 400 } else { 200 };
    let g = Arc::new(make_log_grid(1e-3, 1.0, n)?);
    let fd = build_fiducial(default_solution(), 2.0, g.clone())?;
    let mesh = Arc::new(Mesh::new(g)?);
    let (bg, mu, sigma) = annulus_source_solution(&fd, mesh, &[0, 1, 2, 3, 4], (0.7, 0.95))?;
    let rep = check_subharmonic(&bg, &mu, &sigma, (0.01, 0.6), 16)?;
    let ok = rep.fraction_ok() >= 0.99 && rep.maximum_on_boundary();
    Ok((
        ok,
        format!(
            "inequality holds at {:.2}% of {} interior nodes (>= 99%), worst relative slack {:.3}, maximum on boundary {}",
            100.0 * rep.fraction_ok(),
            rep.nodes_checked,
            rep.worst_slack,
            rep.maximum_on_boundary()
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_fields_are_skew_hermitian_and_traceless() {
        let g = Arc::new(make_log_grid(0.05, 1.0, 50).unwrap());
        let mut s = FieldSampler::new(g, 3);
        for x in [s.su_one_form(), s.su(Form::Function), s.su(Form::DzDzbar)] {
            assert!(x.add(&x.adjoint()).max_abs() < 1e-15);
        }
        let y = s.sl(Form::Dz);
        for (k, p) in y.terms().filter(|(k, _)| k.slot == Slot::S11) {
            let q = y.get(&Key::new(Slot::S22, k.form, k.n)).unwrap();
            assert!(p.add(q).max_abs() < 1e-15);
        }
    }

    #[test]
    fn adjointness_holds_on_a_few_random_tuples() {
        let (a, b) = adjointness_defects(5, 11, 300).unwrap();
        assert!(a <= 1e-8 && b <= 1e-8, "{a} {b}");
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let r = run_criterion(11, Level::Reduced);
        assert!(!r.passed && r.name == "unknown");
    }
}
