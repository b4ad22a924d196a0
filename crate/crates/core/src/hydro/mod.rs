//! Finite-difference solvers for the hydrodynamic equations, a spectral
//! oracle for the homogeneous problems, and weak-formulation residuals.

mod solver;
mod spectral;
mod stationary;
mod weak;

pub use solver::{solve, BoundarySpec, Grid, Scheme, MAX_PRINCIPLE_TOL};
pub use spectral::{spectral_oracle, SpectralBc, SpectralSeries};
pub use stationary::stationary_dirichlet;
pub use weak::{weak_residual, WeakRegime};
