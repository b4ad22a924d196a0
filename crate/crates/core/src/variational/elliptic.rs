use crate::error::{Error, Result};
use crate::field::{FieldClass, SpaceTimeField};
use crate::profile::SpaceTimeProfile;
use crate::quad::{cumulative_trapezoid, gradient, trapezoid};

use super::functionals::{mass_drift, PDE_MASS_TOL};

/// Densities must stay this many grid spacings away from {0,1}.
pub const DEGENERACY_FACTOR: f64 = 10.0;

fn check_margin(rho: &SpaceTimeProfile) -> Result<()> {
    let (lo, hi) = rho.min_max();
    let margin = lo.min(1.0 - hi);
    let required = DEGENERACY_FACTOR * rho.du();
    if margin < required {
        return Err(Error::DegenerateDensity { margin, required });
    }
    Ok(())
}

/// a_t(u) = ∂_uρ_t(u) - ∫_0^u ∂_tρ_t, row by row. The optimal tilt solves
/// 2χ(ρ)∂_uH = a - C_t.
fn source_rows(rho: &SpaceTimeProfile) -> Result<Vec<Vec<f64>>> {
    let (nt, ns) = (rho.n_times(), rho.n_space());
    if nt < 3 {
        return Err(Error::Invalid("the elliptic inversion needs at least three time rows".into()));
    }
    let du = rho.du();
    let dt = rho.dt();
    let mut drho_dt = vec![vec![0.0; ns]; nt];
    let mut column = vec![0.0; nt];
    // Column-wise: time derivative at each space node.
    #[allow(clippy::needless_range_loop)]
    for i in 0..ns {
        for (k, c) in column.iter_mut().enumerate() {
            *c = rho.row(k)[i];
        }
        for (k, d) in gradient(&column, dt).into_iter().enumerate() {
            drho_dt[k][i] = d;
        }
    }
    Ok(rho
        .rows()
        .zip(drho_dt)
        .map(|(row, dtr)| {
            let grad = gradient(row, du);
            let flux = cumulative_trapezoid(&dtr, du);
            grad.iter().zip(flux).map(|(g, f)| g - f).collect()
        })
        .collect())
}

fn integrate_rows(rho: &SpaceTimeProfile, dirichlet: bool) -> Result<Vec<Vec<f64>>> {
    let du = rho.du();
    let sources = source_rows(rho)?;
    Ok(rho
        .rows()
        .zip(sources)
        .map(|(row, a)| {
            let inv: Vec<f64> = row.iter().map(|r| 1.0 / (2.0 * r * (1.0 - r))).collect();
            let c = if dirichlet {
                let weighted: Vec<f64> = a.iter().zip(&inv).map(|(x, v)| x * v).collect();
                trapezoid(&weighted, du) / trapezoid(&inv, du)
            } else {
                0.0
            };
            let slope: Vec<f64> = a.iter().zip(&inv).map(|(x, v)| (x - c) * v).collect();
            let mut h = cumulative_trapezoid(&slope, du);
            if dirichlet {
                let g = h.len() - 1;
                h[g] = 0.0;
            }
            h
        })
        .collect())
}

/// Tilt H (vanishing at u = 0, 1) whose perturbed Dirichlet equation has
/// ρ as solution:
/// H_t(u) = ∫_0^u (a_t - 𝕀_t/I_t)/(2χ(ρ_t)), with I_t = ∫_0^1 1/(2χ(ρ_t)) and
/// 𝕀_t = ∫_0^1 a_t/(2χ(ρ_t)).
pub fn elliptic_dirichlet(rho: &SpaceTimeProfile) -> Result<SpaceTimeField> {
    check_margin(rho)?;
    let rows = integrate_rows(rho, true)?;
    SpaceTimeField::from_rows(rho.horizon(), rows, FieldClass::DirichletZero)
}

/// Tilt H with H_t(0) = 0 whose Robin problem has ρ as solution:
/// H_t(u) = ∫_0^u a_t/(2χ(ρ_t)). Requires a mass-conserving path.
pub fn elliptic_neumann(rho: &SpaceTimeProfile) -> Result<SpaceTimeField> {
    elliptic_neumann_tol(rho, PDE_MASS_TOL)
}

pub fn elliptic_neumann_tol(rho: &SpaceTimeProfile, mass_tol: f64) -> Result<SpaceTimeField> {
    check_margin(rho)?;
    let drift = mass_drift(rho);
    if drift > mass_tol {
        return Err(Error::MassDriftError {
            drift,
            tolerance: mass_tol,
        });
    }
    let rows = integrate_rows(rho, false)?;
    SpaceTimeField::from_rows(rho.horizon(), rows, FieldClass::Free)
}
