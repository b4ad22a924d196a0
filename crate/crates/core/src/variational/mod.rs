//! Building blocks of the rate functional: the energy, the linear functional
//! ℓ_H, the quadratic cost Φ_H, J_H = ℓ_H - Φ_H, its supremum over a finite
//! tilt basis, and the elliptic inversions that recover the optimal tilt of a
//! given density path.

mod basis;
mod elliptic;
mod functionals;
mod rate;

pub use basis::TiltBasis;
pub use elliptic::{elliptic_dirichlet, elliptic_neumann, elliptic_neumann_tol, DEGENERACY_FACTOR};
pub use functionals::{
    ell, ell_integrated, empirical_mass_tol, energy_single, fisher_energy, j_functional, mass_drift, phi,
    quadratic_cost, FisherReport, FISHER_CAP, PDE_MASS_TOL,
};
pub use rate::{energy, rate_form, rate_function, Maximum, QuadraticForm, RateReport, RIDGE};

pub use crate::hydro::WeakRegime;
