//! Command-line front end. Every command writes one CSV table (header first,
//! floats at 17 significant digits) to `--out` or standard output.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error,
//! 3 acceptance failure (`selftest`).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::acceptance::{run_all, Level};
use crate::curvature::{lambda_locality_check, scan_and_fit, CurvaturePoint, CurvatureSettings};
use crate::error::{Error, Result};
use crate::fiducial::{build_fiducial, check_fiducial_bounds};
use crate::grid::make_log_grid;
use crate::painleve::{default_solution, solve_painleve, DEFAULT_N, DEFAULT_RHO_MAX, DEFAULT_RHO_MIN, DEFAULT_TOL};
use crate::spectral::{assemble_mode, green_uniformity, homogeneous_decay_rate, DecayKind, DecaySettings, Sign, Subspace};
use crate::tangent::{horizontal_convergence, HolQuadDiff};
use crate::C64;

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "HITCHIN_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hitchin", version, about = "Fiducial Hitchin solution, deformation complex spectra and curvature asymptotics")]
#[command(after_help = "Worker threads: set HITCHIN_THREADS (default: all cores).")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Painlevé III boundary value problem and tabulate ψ.
    PainleveSolve {
        #[arg(long, default_value_t = DEFAULT_RHO_MIN, value_parser = positive)]
        rho_min: f64,
        #[arg(long, default_value_t = DEFAULT_RHO_MAX, value_parser = positive)]
        rho_max: f64,
        #[arg(long, default_value_t = DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_TOL, value_parser = positive)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Check the properties of f_t, h_t over a t sweep.
    FiducialCheck {
        #[arg(long, default_value = "1,2,4,8,16,32", value_parser = parse_list)]
        t_list: PositiveList,
        #[arg(long, default_value_t = 1e-5, value_parser = positive)]
        r_min: f64,
        #[arg(long, default_value_t = 600)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Build Coulomb-gauged tangent vectors and their distance to the limit.
    TangentBuild {
        /// Coefficients c0,c1,... of ḟ = Σ c_k z^k (complex, e.g. "1,0.5-2i").
        #[arg(long, default_value = "1", value_parser = parse_quad)]
        f: HolQuadDiff,
        #[arg(long, default_value = "8,16,32,64", value_parser = parse_list)]
        t_list: PositiveList,
        #[arg(long, default_value_t = 1e-5, value_parser = positive)]
        r_min: f64,
        #[arg(long, default_value_t = 600)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Smallest eigenvalue of every degree-2 block on the unit disk.
    ModeSpectrum {
        #[arg(long, default_value_t = 4.0, value_parser = at_least_one)]
        t: f64,
        #[arg(long, default_value_t = 8)]
        ell_max: u32,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        r_min: f64,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Fitted decay of homogeneous solutions of the limiting blocks.
    DecayRates {
        #[arg(long, default_value_t = 6)]
        ell_max: u32,
        #[command(flatten)]
        output: Output,
    },
    /// 1/λ_min over all degree-2 blocks for each t.
    GreenScaling {
        #[arg(long, default_value = "1,2,4,8,16,32", value_parser = parse_list)]
        t_list: PositiveList,
        #[arg(long, default_value_t = 8)]
        ell_max: u32,
        #[arg(long, default_value_t = 1e-3, value_parser = positive)]
        r_min: f64,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Jost–Peng terms and sectional curvature over a t sweep.
    CurvatureScan {
        #[command(flatten)]
        plane: Plane,
        #[command(flatten)]
        output: Output,
    },
    /// Fitted slope and extrapolated λ, with the locality comparison.
    Lambda {
        #[command(flatten)]
        plane: Plane,
        #[command(flatten)]
        output: Output,
    },
    /// Run all acceptance criteria (reduced resolution unless --full).
    Selftest {
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
pub struct Plane {
    /// Coefficients of the first quadratic differential.
    #[arg(long, default_value = "1", value_parser = parse_quad)]
    pub f1: HolQuadDiff,
    /// Coefficients of the second quadratic differential.
    #[arg(long, default_value = "i", value_parser = parse_quad)]
    pub f2: HolQuadDiff,
    #[arg(long, default_value = "8,16,32,64", value_parser = parse_list)]
    pub t_list: PositiveList,
    #[arg(long, default_value_t = 8)]
    pub ell_max: u32,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    pub r_min: f64,
    #[arg(long, default_value_t = 600)]
    pub n: usize,
}

impl Plane {
    fn settings(&self) -> CurvatureSettings {
        CurvatureSettings { r_min: self.r_min, n: self.n, ell_max: self.ell_max }
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn at_least_one(s: &str) -> std::result::Result<f64, String> {
    match positive(s)? {
        v if v >= 1.0 => Ok(v),
        _ => Err(format!("t must be at least 1, got `{s}`")),
    }
}

/// Comma-separated list of positive numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveList(pub Vec<f64>);

impl std::ops::Deref for PositiveList {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Comma-separated positive numbers: `8,16,32`.
pub fn parse_list(s: &str) -> std::result::Result<PositiveList, String> {
    let v = s.split(',').map(positive).collect::<std::result::Result<Vec<_>, _>>().map_err(|e| format!("malformed list `{s}`: {e}"))?;
    Ok(PositiveList(v))
}

/// Comma-separated complex coefficients `c0,c1,...` of `Σ c_k z^k`.
pub fn parse_quad(s: &str) -> std::result::Result<HolQuadDiff, String> {
    let coeffs = s
        .split(',')
        .map(|t| t.trim().parse::<C64>().map_err(|_| format!("malformed coefficient `{t}` in `{s}`")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if coeffs.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return Err(format!("quadratic differential `{s}` is zero"));
    }
    HolQuadDiff::new(coeffs).map_err(|e| e.to_string())
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(Cell::render))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Write `table` to `path`, or to `stdout` when no path is given.
pub fn emit_csv(table: &Table, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => table.write_to(std::fs::File::create(p)?),
        None => table.write_to(stdout),
    }
}

fn sign_name(s: Sign) -> String {
    s.symbol().to_string()
}

fn curvature_row(p: &CurvaturePoint) -> Vec<Cell> {
    vec![p.t.into(), p.term_oneill.into(), p.term_gauss_1.into(), p.term_gauss_2.into(), p.gram.into(), p.k.into(), p.t43k().into()]
}

pub const CURVATURE_HEADER: [&str; 7] = ["t", "term_oneill", "term_gauss_1", "term_gauss_2", "gram", "K", "t43K"];

/// Outcome of a command: the table and the exit code on success.
fn execute(cmd: &Command, diag: &mut dyn Write) -> Result<(Table, i32)> {
    let sol = default_solution();
    let mut code = EXIT_OK;
    let table = match cmd {
        Command::PainleveSolve { rho_min, rho_max, n, tol, .. } => {
            let s = solve_painleve(*rho_min, *rho_max, *n, *tol)?;
            let _ = writeln!(diag, "a0 = {:.16e}, amplitude = {:.16e}, match residual = {:.3e}", s.a_coeffs[0], s.amplitude, s.match_residual);
            let mut t = Table::new(&["rho", "psi", "psi_prime"]);
            for ((r, p), d) in s.rho_grid.nodes().iter().zip(&s.psi).zip(&s.psi_prime) {
                t.push(vec![(*r).into(), (*p).into(), (*d).into()]);
            }
            t
        }
        Command::FiducialCheck { t_list, r_min, n, .. } => {
            let g = std::sync::Arc::new(make_log_grid(*r_min, 1.0, *n)?);
            let sweep = t_list.par_iter().map(|&t| build_fiducial(sol, t, g.clone())).collect::<Result<Vec<_>>>()?;
            let rep = check_fiducial_bounds(&sweep)?;
            let _ = writeln!(diag, "all clauses hold: {} (iii variation {:.4}, v variation {:.4})", rep.all_ok(), rep.iii_variation, rep.v_variation);
            let mut t = Table::new(&[
                "t", "f_min", "f_max", "f_dist_far", "sup_f_over_r_scaled", "sup_f_over_r2_scaled", "decay_constant", "b0", "sup_plus", "sup_minus",
            ]);
            for r in &rep.rows {
                t.push(vec![
                    r.t.into(),
                    r.f_min.into(),
                    r.f_max.into(),
                    r.f_dist_far.into(),
                    r.sup_f_over_r_scaled.into(),
                    r.sup_f_over_r2_scaled.into(),
                    r.decay_constant.into(),
                    r.b0.into(),
                    r.sup_plus.into(),
                    r.sup_minus.into(),
                ]);
            }
            t
        }
        Command::TangentBuild { f, t_list, r_min, n, .. } => {
            let rep = horizontal_convergence(sol, f, t_list, *r_min, *n)?;
            let _ = writeln!(diag, "slope of distance to the limit: {:.6}", rep.slope);
            let mut t = Table::new(&["t", "distance", "gauge_norm", "defect_sup_over_t"]);
            for i in 0..rep.ts.len() {
                t.push(vec![rep.ts[i].into(), rep.distances[i].into(), rep.gauge_norms[i].into(), rep.defect_sup_over_t[i].into()]);
            }
            t
        }
        Command::ModeSpectrum { t, ell_max, r_min, n, .. } => {
            let blocks: Vec<(u32, Sign)> =
                (0..=*ell_max).flat_map(|l| [Sign::Plus, Sign::Minus].into_iter().filter(move |s| l > 0 || *s == Sign::Plus).map(move |s| (l, s))).collect();
            let lams = blocks
                .par_iter()
                .map(|&(l, s)| assemble_mode(sol, *t, l, s, (*r_min, 1.0), *n)?.smallest_eigenvalue())
                .collect::<Result<Vec<_>>>()?;
            let mut tab = Table::new(&["t", "ell", "sign", "lambda_min"]);
            for ((l, s), lam) in blocks.iter().zip(lams) {
                tab.push(vec![(*t).into(), (*l).into(), sign_name(*s).into(), lam.into()]);
            }
            tab
        }
        Command::DecayRates { ell_max, .. } => {
            let s = DecaySettings::default();
            let jobs: Vec<(u32, Subspace)> = (0..=*ell_max).flat_map(|l| [(l, Subspace::Parallel), (l, Subspace::Perpendicular)]).collect();
            let fits = jobs.par_iter().map(|&(l, sub)| homogeneous_decay_rate(l, Sign::Plus, sub, &s)).collect::<Result<Vec<_>>>()?;
            let mut t = Table::new(&["ell", "sign", "subspace", "branch", "kind", "value", "fit_residual"]);
            for f in fits.into_iter().flatten() {
                let (kind, v) = match f.kind {
                    DecayKind::Power { slope } => ("power_slope", slope),
                    DecayKind::Exponential { rate } => ("exp_rate", rate),
                };
                let sub = if f.subspace == Subspace::Parallel { "parallel" } else { "perpendicular" };
                t.push(vec![f.ell.into(), sign_name(f.sign).into(), sub.into(), f.branch.clone().into(), kind.into(), v.into(), f.fit_residual.into()]);
            }
            t
        }
        Command::GreenScaling { t_list, ell_max, r_min, n, .. } => {
            let rep = green_uniformity(sol, t_list, *ell_max, *r_min, *n)?;
            let _ = writeln!(diag, "max/min of 1/lambda_min: {:.6}", rep.ratio());
            let mut t = Table::new(&["t", "inverse_lambda_min", "worst_ell", "worst_sign"]);
            for i in 0..rep.ts.len() {
                let (l, s) = rep.worst_block[i];
                t.push(vec![rep.ts[i].into(), rep.inverse_lambda[i].into(), l.into(), sign_name(s).into()]);
            }
            t
        }
        Command::CurvatureScan { plane, .. } => {
            let e = scan_and_fit(sol, &plane.f1, &plane.f2, &plane.t_list, &plane.settings())?;
            let mut t = Table::new(&CURVATURE_HEADER);
            for p in &e.points {
                t.push(curvature_row(p));
            }
            t
        }
        Command::Lambda { plane, .. } => {
            let s = plane.settings();
            let e = scan_and_fit(sol, &plane.f1, &plane.f2, &plane.t_list, &s)?;
            let loc = lambda_locality_check(sol, &plane.f1, &e.f2, &plane.t_list, &s)?;
            let mut t = Table::new(&["slope", "numerator_slope", "lambda", "lambda_k", "sign_change", "locality_slope", "locality_rel_diff_last"]);
            t.push(vec![
                e.slope.into(),
                e.numerator_slope.into(),
                e.lambda.into(),
                e.lambda_k.into(),
                e.sign_change.into(),
                loc.slope.map_or(Cell::Text(String::new()), Cell::Num),
                loc.rel_diff.last().copied().unwrap_or(0.0).into(),
            ]);
            t
        }
        Command::Selftest { full, .. } => {
            let res = run_all(if *full { Level::Full } else { Level::Reduced });
            let mut t = Table::new(&["id", "name", "status", "seconds", "detail"]);
            for r in &res {
                let _ = writeln!(diag, "{r}");
                t.push(vec![i32::from(r.id).into(), r.name.into(), (if r.passed { "PASS" } else { "FAIL" }).into(), r.seconds.into(), r.detail.clone().into()]);
            }
            if res.iter().any(|r| !r.passed) {
                code = EXIT_ACCEPTANCE;
            }
            t
        }
    };
    Ok((table, code))
}

fn output_of(cmd: &Command) -> Option<&Path> {
    let o = match cmd {
        Command::PainleveSolve { output, .. }
        | Command::FiducialCheck { output, .. }
        | Command::TangentBuild { output, .. }
        | Command::ModeSpectrum { output, .. }
        | Command::DecayRates { output, .. }
        | Command::GreenScaling { output, .. }
        | Command::CurvatureScan { output, .. }
        | Command::Lambda { output, .. }
        | Command::Selftest { output, .. } => output,
    };
    o.out.as_deref()
}

/// Configure the global worker pool from [`THREADS_ENV`].
pub fn init_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    // a second initialisation (e.g. in tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

// a closed downstream reader (e.g. `| head`) is not a failure
fn is_broken_pipe(e: &Error) -> bool {
    let kind = match e {
        Error::Io(io) => Some(io.kind()),
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io.kind()),
            _ => None,
        },
        _ => None,
    };
    kind == Some(std::io::ErrorKind::BrokenPipe)
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    if let Err(m) = init_threads() {
        let _ = writeln!(stderr, "error: {m}");
        return EXIT_USAGE;
    }
    let result = execute(&cli.command, stderr).and_then(|(t, code)| emit_csv(&t, output_of(&cli.command), stdout).map(|_| code));
    match result {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Parameter(_) | Error::DegeneratePlane(_) => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            }
        }
    }
}
