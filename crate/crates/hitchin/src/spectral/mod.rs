//! Mode-decomposed Laplacians `D⁰ = i*i` and `D² = LL*`, their Neumann
//! spectra and Green operators, and the homogeneous-solution analysis.

mod band;
mod decay;
mod explicit;
mod leakage;
mod mesh;
mod operator;
mod scaling;
mod sector;
mod subharmonic;

pub use explicit::{apply_plus, composition_deviation, embed_plus, PlusTuple};
pub use leakage::{mode_leakage, LeakageReport};
pub use decay::{fit_exponential, fit_line, homogeneous_decay_rate, ode_coefficients, parallel_basis, DecayFit, DecayKind, DecaySettings, Subspace};
pub use subharmonic::{annulus_source_solution, check_subharmonic, SubharmonicReport, RESIDUAL_TOL, SUBHARMONIC_COEFFS, SUBHARMONIC_COEFFS_DERIVED, check_subharmonic_with};
pub use band::{BandCholesky, BandMatrix};
pub use mesh::Mesh;
pub use operator::{pair_image, MeshBackground, apply_b, ModeVector, RadialOperatorMatrix};
pub use scaling::{assemble_mode, eigen_scaling, green_uniformity, model_solution_scaling, model_source, EigenScaling, GreenUniformity, ModelGrid, ModelScaling, UNIT_DISK_LAMBDA};
pub use sector::{restrict, sectors_of, Degree, Entry, SectorLayout, Sign, Unknown};
