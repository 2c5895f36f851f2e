//! Local model for the ends of the rank-2 Higgs bundle moduli space.
//!
//! The fiducial solution on the unit disk with `q = -z dz^2` is built from the
//! Painlevé III function, the deformation complex is discretised per angular
//! mode, and the sectional curvature of planes spanned by Coulomb-gauged
//! tangent vectors is computed from the Jost–Peng formula.

pub mod error;

pub mod fiducial;
pub mod field;
pub mod grid;
pub mod operators;

pub mod painleve;
pub mod spectral;
pub mod tangent;
pub mod curvature;
pub mod acceptance;
pub mod cli;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
