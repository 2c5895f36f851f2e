//! Thin Python wrappers around the `hitchin` crate. Numbers go in and out as
//! plain floats, complex numbers and lists.

use hitchin::acceptance::{run_criterion as run_one, Level};
use hitchin::curvature::{sectional_curvature as curvature, CurvatureSettings, LAMBDA_ONE_I};
use hitchin::fiducial::build_fiducial;
use hitchin::grid::make_log_grid;
use hitchin::painleve::{default_solution, solve_painleve, DEFAULT_N, DEFAULT_RHO_MAX, DEFAULT_RHO_MIN, DEFAULT_TOL};
use hitchin::spectral::{assemble_mode, Sign};
use hitchin::tangent::HolQuadDiff;
use hitchin::{Error, C64};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parameter(_) | Error::DegeneratePlane(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn quad(coeffs: Vec<C64>) -> PyResult<HolQuadDiff> {
    HolQuadDiff::new(coeffs).map_err(py_err)
}

/// Solve the Painlevé III problem; returns `rho`, `psi`, `psi_prime`, `amplitude`, `match_residual`.
#[pyfunction]
#[pyo3(signature = (rho_min=DEFAULT_RHO_MIN, rho_max=DEFAULT_RHO_MAX, n=DEFAULT_N, tol=DEFAULT_TOL))]
fn painleve_solve(py: Python<'_>, rho_min: f64, rho_max: f64, n: usize, tol: f64) -> PyResult<Bound<'_, PyDict>> {
    let s = solve_painleve(rho_min, rho_max, n, tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("rho", s.rho_grid.nodes().to_vec())?;
    d.set_item("psi", s.psi.clone())?;
    d.set_item("psi_prime", s.psi_prime.clone())?;
    d.set_item("amplitude", s.amplitude)?;
    d.set_item("match_residual", s.match_residual)?;
    Ok(d)
}

/// Radial profiles `r`, `f`, `h` of the fiducial solution at `t`.
#[pyfunction]
#[pyo3(signature = (t, r_min=1e-5, n=600))]
fn fiducial_profiles(py: Python<'_>, t: f64, r_min: f64, n: usize) -> PyResult<Bound<'_, PyDict>> {
    let g = std::sync::Arc::new(make_log_grid(r_min, 1.0, n).map_err(py_err)?);
    let fd = build_fiducial(default_solution(), t, g).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("r", fd.grid.nodes().to_vec())?;
    d.set_item("f", fd.f.clone())?;
    d.set_item("h", fd.h.clone())?;
    Ok(d)
}

/// Smallest eigenvalue of the degree-2 block `(ell, sign)` on the unit disk; `sign` is "+" or "-".
#[pyfunction]
#[pyo3(signature = (t, ell, sign="+", r_min=1e-3, n=300))]
fn smallest_eigenvalue(t: f64, ell: u32, sign: &str, r_min: f64, n: usize) -> PyResult<f64> {
    let sign = match sign {
        "+" => Sign::Plus,
        "-" => Sign::Minus,
        _ => return Err(PyValueError::new_err(format!("sign must be '+' or '-', got {sign:?}"))),
    };
    assemble_mode(default_solution(), t, ell, sign, (r_min, 1.0), n).and_then(|m| m.smallest_eigenvalue()).map_err(py_err)
}

/// Sectional curvature of the plane spanned by two quadratic differentials
/// given as coefficient lists; returns the three terms, `gram` and `K`.
#[pyfunction]
#[pyo3(signature = (f1, f2, t, r_min=1e-4, n=600, ell_max=8))]
fn sectional_curvature(py: Python<'_>, f1: Vec<C64>, f2: Vec<C64>, t: f64, r_min: f64, n: usize, ell_max: u32) -> PyResult<Bound<'_, PyDict>> {
    let s = CurvatureSettings { r_min, n, ell_max };
    let p = curvature(default_solution(), &quad(f1)?, &quad(f2)?, t, &s).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("t", p.t)?;
    d.set_item("term_oneill", p.term_oneill)?;
    d.set_item("term_gauss_1", p.term_gauss_1)?;
    d.set_item("term_gauss_2", p.term_gauss_2)?;
    d.set_item("gram", p.gram)?;
    d.set_item("K", p.k)?;
    Ok(d)
}

/// Run one acceptance criterion (1..=10); returns `(passed, detail)`.
#[pyfunction]
#[pyo3(signature = (id, full=false))]
fn run_criterion(id: u8, full: bool) -> (bool, String) {
    let r = run_one(id, if full { Level::Full } else { Level::Reduced });
    (r.passed, r.detail)
}

#[pymodule]
fn hitchin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LAMBDA_ONE_I", LAMBDA_ONE_I)?;
    m.add_function(wrap_pyfunction!(painleve_solve, m)?)?;
    m.add_function(wrap_pyfunction!(fiducial_profiles, m)?)?;
    m.add_function(wrap_pyfunction!(smallest_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(sectional_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(run_criterion, m)?)?;
    Ok(())
}
