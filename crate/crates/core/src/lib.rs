//! PML boundary integral equation solver for two-dimensional TE/TM scattering
//! by a locally perturbed interface between two homogeneous half-spaces.
//!
//! The interface is truncated to a finite curve `Γ_AB` whose ends lie inside a
//! perfectly matched layer. Each half-space gets a dense Neumann-to-Dirichlet
//! matrix built from Alpert-corrected Nyström discretizations of the
//! PML-stretched single- and double-layer operators; the transmission
//! conditions then couple the two matrices into one linear solve.
//!
//! Module map:
//!
//! - [`special_fn`]: complex square root, logarithm, Hankel functions.
//! - [`geometry`]: piecewise-smooth curves, grading, meshes.
//! - [`pml`]: absorbing profile, complex stretching, PML Green's functions.
//! - [`kernels`]: stabilized distances and the Nyström kernels.
//! - [`quadrature`]: Gauss rules, the Alpert rule, trigonometric interpolation.
//! - [`ntd`]: operator assembly and Neumann-to-Dirichlet matrices.
//! - [`solver`]: reference fields, jump data, transmission solves, field
//!   evaluation.
//! - [`oracle`]: layered-medium Green's function and extended-precision
//!   Hankel functions for validation.
//! - [`cli`]: configuration, example presets and experiment drivers.

pub mod cli;
pub mod geometry;
pub mod kernels;
pub mod ntd;
pub mod oracle;
pub mod pml;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod special_fn;

use thiserror::Error;

pub use scalar::{Cx, Real};

/// Complex double, the working type of the assembled operators.
pub type C64 = num_complex::Complex64;
/// Double-precision curve.
pub type Curve = geometry::PiecewiseCurve<f64>;
/// Double-precision graded mesh.
pub type Mesh = geometry::GradedMesh<f64>;
/// Double-precision absorbing profile.
pub type Profile = pml::PmlProfile<f64>;
/// Double-precision kernel context.
pub type Kernels<'a> = kernels::KernelContext<'a, f64>;

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    SpecialFn(#[from] special_fn::SpecialFnError),
    #[error(transparent)]
    Quadrature(#[from] quadrature::QuadratureError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Kernel(#[from] kernels::KernelError),
    #[error(transparent)]
    Ntd(#[from] ntd::NtdError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Config(#[from] cli::ConfigError),
    #[error(transparent)]
    Driver(#[from] cli::drivers::DriverError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
