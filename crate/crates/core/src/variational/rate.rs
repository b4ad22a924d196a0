use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldClass;
use crate::hydro::WeakRegime;
use crate::profile::SpaceTimeProfile;
use crate::quad::{gregory_weights, trapezoid_weights};

use super::basis::TiltBasis;
use super::functionals::{ell_samples, mass_drift, time_weights, Samples};

/// Ridge added to a singular quadratic form.
pub const RIDGE: f64 = 1e-10;

/// The concave quadratic c ↦ bᵀc - cᵀQc over a finite basis. Coordinates
/// marked flat have a zero row in Q and are left out of the maximisation.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub b: DVector<f64>,
    pub q: DMatrix<f64>,
    pub flat: Vec<bool>,
}

/// Maximiser of a quadratic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub value: f64,
    pub coefficients: Vec<f64>,
    pub regularized: bool,
}

impl QuadraticForm {
    /// Value of bᵀc - cᵀQc.
    pub fn eval(&self, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        self.b.dot(&c) - c.dot(&(&self.q * &c))
    }

    /// Solves 2Qc = b on the non-flat coordinates; the supremum is bᵀQ⁻¹b/4.
    /// Falls back to Q + RIDGE·I when Q is not positive definite.
    pub fn maximize(&self) -> Result<Maximum> {
        let idx: Vec<usize> = (0..self.flat.len()).filter(|&j| !self.flat[j]).collect();
        let m = idx.len();
        let q = DMatrix::from_fn(m, m, |r, c| self.q[(idx[r], idx[c])]);
        let b = DVector::from_fn(m, |r, _| self.b[idx[r]]);
        let (chol, regularized) = match q.clone().cholesky() {
            Some(ch) => (ch, false),
            None => {
                let ridged = q + DMatrix::identity(m, m) * RIDGE;
                (ridged.cholesky().ok_or(Error::SingularSystem)?, true)
            }
        };
        let x = chol.solve(&b);
        let value = 0.25 * b.dot(&x);
        let mut coefficients = vec![0.0; self.flat.len()];
        for (r, &j) in idx.iter().enumerate() {
            coefficients[j] = 0.5 * x[r];
        }
        Ok(Maximum {
            value,
            coefficients,
            regularized,
        })
    }
}

/// Space-time Gram-type matrix Σ_k wt_k τ_a τ_b Σ_i w_i c(ρ_{k,i}) f_p(u_i) f_q(u_i)
/// with space weights w, f the component `deriv` (0: value, 1: first
/// derivative) of the space factors.
fn tensor_form(
    rho: &SpaceTimeProfile,
    basis: &TiltBasis,
    deriv: usize,
    w: &[f64],
    weight: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let ns = rho.n_space();
    let du = rho.du();
    let wt = time_weights(rho);
    let sl = basis.space_len();
    let space: Vec<Vec<f64>> = (0..sl)
        .map(|p| (0..ns).map(|i| basis.space(p, i as f64 * du)[deriv]).collect())
        .collect();
    let len = basis.len();
    let mut q = DMatrix::zeros(len, len);
    let mut m = DMatrix::zeros(sl, sl);
    for (k, row) in rho.rows().enumerate() {
        if wt[k] == 0.0 {
            continue;
        }
        let c: Vec<f64> = (0..ns).map(|i| w[i] * weight(row[i])).collect();
        for p in 0..sl {
            for r in p..sl {
                let v: f64 = (0..ns).map(|i| c[i] * space[p][i] * space[r][i]).sum();
                m[(p, r)] = v;
                m[(r, p)] = v;
            }
        }
        let t = rho.time(k);
        let tau: Vec<f64> = (0..basis.time_nodes)
            .map(|a| basis.time_hat(a, t, rho.horizon()))
            .collect();
        for a in 0..basis.time_nodes {
            for bb in 0..basis.time_nodes {
                let s = wt[k] * tau[a] * tau[bb];
                if s == 0.0 {
                    continue;
                }
                for p in 0..sl {
                    for r in 0..sl {
                        q[(a * sl + p, bb * sl + r)] += s * m[(p, r)];
                    }
                }
            }
        }
    }
    q
}

/// ℰ(ρ) = sup_H ℰ_H(ρ) over the span of a DirichletZero basis.
pub fn energy(rho: &SpaceTimeProfile, basis: &TiltBasis) -> Result<Maximum> {
    if basis.class != FieldClass::DirichletZero {
        return Err(Error::ClassMismatch("the energy needs tilts vanishing at the ends".into()));
    }
    let ns = rho.n_space();
    let w = trapezoid_weights(ns, rho.du());
    let wt = time_weights(rho);
    let b: Vec<f64> = (0..basis.len())
        .into_par_iter()
        .map(|j| {
            let s = Samples::of_basis(basis, j, rho);
            rho.rows()
                .enumerate()
                .map(|(k, row)| wt[k] * (0..ns).map(|i| w[i] * row[i] * s.hu[k * ns + i]).sum::<f64>())
                .sum()
        })
        .collect();
    let form = QuadraticForm {
        b: DVector::from_vec(b),
        q: tensor_form(rho, basis, 0, &w, |_| 2.0),
        flat: vec![false; basis.len()],
    };
    form.maximize()
}

/// Rate-function report; `value` is +∞ (serialised as null) off the
/// mass-conserving paths of the Neumann regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub value: f64,
    pub infinite: bool,
    pub time_nodes: usize,
    pub space_modes: usize,
    pub class: FieldClass,
    /// Maximiser coefficients; zero on flat coordinates.
    pub coefficients: Vec<f64>,
    /// ℓ of each basis element.
    pub linear_terms: Vec<f64>,
    /// ℓ of the constant-in-space elements, which the maximisation skips.
    pub flat_terms: Vec<f64>,
    pub regularized: bool,
    pub mass_drift: f64,
}

/// The quadratic form H ↦ ℓ_H(ρ) - Φ_H(ρ) on the basis.
pub fn rate_form(rho: &SpaceTimeProfile, regime: WeakRegime, basis: &TiltBasis) -> Result<QuadraticForm> {
    if matches!(regime, WeakRegime::Dirichlet { .. }) && basis.class != FieldClass::DirichletZero {
        return Err(Error::ClassMismatch("the Dirichlet regime needs a DirichletZero basis".into()));
    }
    let b: Vec<f64> = (0..basis.len())
        .into_par_iter()
        .map(|j| ell_samples(rho, regime, &Samples::of_basis(basis, j, rho)))
        .collect();
    let flat = (0..basis.len()).map(|j| basis.is_flat(basis.split(j).1)).collect();
    Ok(QuadraticForm {
        b: DVector::from_vec(b),
        q: tensor_form(rho, basis, 1, &gregory_weights(rho.n_space(), rho.du()), |r| r * (1.0 - r)),
        flat,
    })
}

/// sup of J_H(ρ) over the span of the basis.
pub fn rate_function(
    rho: &SpaceTimeProfile,
    regime: WeakRegime,
    basis: &TiltBasis,
    mass_tol: f64,
) -> Result<RateReport> {
    let drift = mass_drift(rho);
    let form = rate_form(rho, regime, basis)?;
    let flat_terms: Vec<f64> = (0..basis.len()).filter(|&j| form.flat[j]).map(|j| form.b[j]).collect();
    let linear_terms = form.b.iter().copied().collect();
    let report = |value: f64, coefficients: Vec<f64>, regularized: bool| RateReport {
        value,
        infinite: value.is_infinite(),
        time_nodes: basis.time_nodes,
        space_modes: basis.space_modes,
        class: basis.class,
        coefficients,
        linear_terms,
        flat_terms,
        regularized,
        mass_drift: drift,
    };
    if regime == WeakRegime::Neumann && drift > mass_tol {
        return Ok(report(f64::INFINITY, vec![0.0; basis.len()], false));
    }
    let max = form.maximize()?;
    Ok(report(max.value, max.coefficients, max.regularized))
}
