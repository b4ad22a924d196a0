use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::hydro::WeakRegime;
use crate::profile::SpaceTimeProfile;
use crate::quad::{gradient, gregory_weights, trapezoid_weights};

use super::basis::TiltBasis;

/// Mass tolerance for paths produced by the PDE solvers.
pub const PDE_MASS_TOL: f64 = 1e-8;

/// Mass tolerance for empirical paths: one boundary event moves the mass by 1/n.
pub fn empirical_mass_tol(n: usize) -> f64 {
    1.5 / n as f64
}

/// Cap on the Fisher integrand (∂_uρ)²/χ(ρ).
pub const FISHER_CAP: f64 = 1e12;

/// A tilt sampled at the nodes of a density path: values and first two
/// space derivatives, row-major over (time row, node).
pub(crate) struct Samples {
    pub h: Vec<f64>,
    pub hu: Vec<f64>,
    pub huu: Vec<f64>,
}

impl Samples {
    pub fn of_field(f: &SpaceTimeField, rho: &SpaceTimeProfile) -> Self {
        let (nt, ns) = (rho.n_times(), rho.n_space());
        let du = rho.du();
        let mut s = Samples::with_capacity(nt * ns);
        for k in 0..nt {
            let t = rho.time(k);
            for i in 0..ns {
                let u = i as f64 * du;
                s.h.push(f.value(t, u));
                s.hu.push(f.du(t, u));
                s.huu.push(f.duu(t, u));
            }
        }
        s
    }

    /// Element j of the basis.
    pub fn of_basis(basis: &TiltBasis, j: usize, rho: &SpaceTimeProfile) -> Self {
        let (a, p) = basis.split(j);
        let (nt, ns) = (rho.n_times(), rho.n_space());
        let du = rho.du();
        let space: Vec<[f64; 3]> = (0..ns).map(|i| basis.space(p, i as f64 * du)).collect();
        let mut s = Samples::with_capacity(nt * ns);
        for k in 0..nt {
            let tau = basis.time_hat(a, rho.time(k), rho.horizon());
            for sp in &space {
                s.h.push(tau * sp[0]);
                s.hu.push(tau * sp[1]);
                s.huu.push(tau * sp[2]);
            }
        }
        s
    }

    fn with_capacity(len: usize) -> Self {
        Samples {
            h: Vec::with_capacity(len),
            hu: Vec::with_capacity(len),
            huu: Vec::with_capacity(len),
        }
    }
}

/// Trapezoid weights in time over the rows of a path (all zero for one row).
pub(crate) fn time_weights(rho: &SpaceTimeProfile) -> Vec<f64> {
    trapezoid_weights(rho.n_times(), rho.dt())
}

/// Boundary traces ρ(0), ρ(1) by quadratic extrapolation from the three
/// nearest interior nodes.
pub(crate) fn traces(row: &[f64]) -> (f64, f64) {
    let g = row.len() - 1;
    if g < 4 {
        return (row[0], row[g]);
    }
    (
        3.0 * row[1] - 3.0 * row[2] + row[3],
        3.0 * row[g - 1] - 3.0 * row[g - 2] + row[g - 3],
    )
}

fn check_class(f: &SpaceTimeField, regime: WeakRegime) -> Result<()> {
    if let WeakRegime::Dirichlet { .. } = regime {
        if !f.vanishes_on_boundary() {
            return Err(Error::ClassMismatch(
                "the Dirichlet regime needs tilts vanishing at u = 0 and u = 1".into(),
            ));
        }
    }
    Ok(())
}

/// Σ_k ⟨ρ_{k+1} - ρ_k, (H_k + H_{k+1})/2⟩, which equals
/// ⟨ρ_T,H_T⟩ - ⟨ρ_0,H_0⟩ - ∫⟨ρ,∂_sH⟩ exactly when H is piecewise linear in
/// time on the rows.
fn increment_pairing(rho: &SpaceTimeProfile, s: &Samples, w: &[f64]) -> f64 {
    let ns = rho.n_space();
    let mut acc = 0.0;
    for k in 0..rho.n_times().saturating_sub(1) {
        let (r0, r1) = (rho.row(k), rho.row(k + 1));
        let (h0, h1) = (&s.h[k * ns..(k + 1) * ns], &s.h[(k + 1) * ns..(k + 2) * ns]);
        for i in 0..ns {
            acc += w[i] * (r1[i] - r0[i]) * 0.5 * (h0[i] + h1[i]);
        }
    }
    acc
}

pub(crate) fn ell_samples(rho: &SpaceTimeProfile, regime: WeakRegime, s: &Samples) -> f64 {
    let ns = rho.n_space();
    let g = ns - 1;
    let w = trapezoid_weights(ns, rho.du());
    let wb = gregory_weights(ns, rho.du());
    let wt = time_weights(rho);
    let mut acc = increment_pairing(rho, s, &w);
    for (k, row) in rho.rows().enumerate() {
        if wt[k] == 0.0 {
            continue;
        }
        let off = k * ns;
        let bulk: f64 = (0..ns).map(|i| wb[i] * row[i] * s.huu[off + i]).sum();
        let (left, right) = match regime {
            WeakRegime::Dirichlet { alpha, beta } => (alpha, beta),
            WeakRegime::Neumann => traces(row),
        };
        let boundary = right * s.hu[off + g] - left * s.hu[off];
        acc += wt[k] * (boundary - bulk);
    }
    acc
}

fn ell_integrated_samples(rho: &SpaceTimeProfile, s: &Samples) -> f64 {
    let ns = rho.n_space();
    let du = rho.du();
    let w = trapezoid_weights(ns, du);
    let wt = time_weights(rho);
    let wb = gregory_weights(ns, du);
    let mut acc = increment_pairing(rho, s, &w);
    for (k, row) in rho.rows().enumerate() {
        if wt[k] == 0.0 {
            continue;
        }
        let grad = gradient(row, du);
        let off = k * ns;
        acc += wt[k] * (0..ns).map(|i| wb[i] * grad[i] * s.hu[off + i]).sum::<f64>();
    }
    acc
}

pub(crate) fn phi_samples(rho: &SpaceTimeProfile, s: &Samples) -> f64 {
    let ns = rho.n_space();
    let w = gregory_weights(ns, rho.du());
    let wt = time_weights(rho);
    let mut acc = 0.0;
    for (k, row) in rho.rows().enumerate() {
        let off = k * ns;
        let inner: f64 = (0..ns)
            .map(|i| w[i] * row[i] * (1.0 - row[i]) * s.hu[off + i] * s.hu[off + i])
            .sum();
        acc += wt[k] * inner;
    }
    acc
}

/// The linear functional ℓ_H(ρ) = ⟨ρ_T,H_T⟩ - ⟨ρ_0,H_0⟩ - ∫⟨ρ,(∂_s+Δ)H⟩ + ∫B,
/// with B = β∂_uH(1) - α∂_uH(0) in the Dirichlet regime and
/// ρ(1)∂_uH(1) - ρ(0)∂_uH(0) in the Neumann regime, the traces read by
/// extrapolation from interior nodes.
pub fn ell(rho: &SpaceTimeProfile, h: &SpaceTimeField, regime: WeakRegime) -> Result<f64> {
    check_class(h, regime)?;
    Ok(ell_samples(rho, regime, &Samples::of_field(h, rho)))
}

/// ℓ after integrating the Laplacian by parts:
/// ⟨ρ_T,H_T⟩ - ⟨ρ_0,H_0⟩ - ∫⟨ρ,∂_sH⟩ + ∫⟨∂_uρ,∂_uH⟩. Equal to `ell` when the
/// traces of ρ match the regime's boundary values.
pub fn ell_integrated(rho: &SpaceTimeProfile, h: &SpaceTimeField, regime: WeakRegime) -> Result<f64> {
    check_class(h, regime)?;
    Ok(ell_integrated_samples(rho, &Samples::of_field(h, rho)))
}

/// Φ_H(ρ) = ∫⟨χ(ρ), (∂_uH)²⟩.
pub fn phi(rho: &SpaceTimeProfile, h: &SpaceTimeField) -> f64 {
    phi_samples(rho, &Samples::of_field(h, rho))
}

/// Φ_H evaluated at the tilted hydrodynamic profile ρ^H.
pub fn quadratic_cost(rho: &SpaceTimeProfile, h: &SpaceTimeField) -> f64 {
    phi(rho, h)
}

/// sup_t |⟨ρ_t,1⟩ - ⟨ρ_0,1⟩| with trapezoid masses.
pub fn mass_drift(rho: &SpaceTimeProfile) -> f64 {
    let m = rho.masses();
    m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max)
}

/// J_H(ρ) = ℓ_H(ρ) - Φ_H(ρ); +∞ in the Neumann regime when the mass of the
/// path drifts by more than `mass_tol`.
pub fn j_functional(rho: &SpaceTimeProfile, h: &SpaceTimeField, regime: WeakRegime, mass_tol: f64) -> Result<f64> {
    check_class(h, regime)?;
    if regime == WeakRegime::Neumann && mass_drift(rho) > mass_tol {
        return Ok(f64::INFINITY);
    }
    let s = Samples::of_field(h, rho);
    Ok(ell_samples(rho, regime, &s) - phi_samples(rho, &s))
}

/// ℰ_H(ρ) = ∫∫ ∂_uH ρ - 2∫∫ H², for H vanishing at the ends of [0,1].
pub fn energy_single(rho: &SpaceTimeProfile, h: &SpaceTimeField) -> f64 {
    let s = Samples::of_field(h, rho);
    let ns = rho.n_space();
    let w = trapezoid_weights(ns, rho.du());
    let wt = time_weights(rho);
    let mut acc = 0.0;
    for (k, row) in rho.rows().enumerate() {
        let off = k * ns;
        let inner: f64 = (0..ns)
            .map(|i| w[i] * (s.hu[off + i] * row[i] - 2.0 * s.h[off + i] * s.h[off + i]))
            .sum();
        acc += wt[k] * inner;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub value: f64,
    /// Space-time measure of the nodes whose integrand hit the cap.
    pub capped_measure: f64,
}

/// ∫∫ (∂_uρ)²/χ(ρ), the integrand capped at `FISHER_CAP`.
pub fn fisher_energy(rho: &SpaceTimeProfile) -> FisherReport {
    let ns = rho.n_space();
    let du = rho.du();
    let w = trapezoid_weights(ns, du);
    let wt = if rho.n_times() == 1 { vec![1.0] } else { time_weights(rho) };
    let mut value = 0.0;
    let mut capped = 0.0;
    for (k, row) in rho.rows().enumerate() {
        let grad = gradient(row, du);
        for i in 0..ns {
            let chi = row[i] * (1.0 - row[i]);
            let g2 = grad[i] * grad[i];
            let mut v = if chi > 0.0 { g2 / chi } else if g2 > 0.0 { f64::INFINITY } else { 0.0 };
            if v > FISHER_CAP {
                v = FISHER_CAP;
                capped += wt[k] * w[i];
            }
            value += wt[k] * w[i] * v;
        }
    }
    FisherReport {
        value,
        capped_measure: capped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, FieldClass, SpaceFn, TimePoly};
    use crate::quad::integrate_adaptive;
    use std::f64::consts::PI;

    fn field(space: SpaceFn, class: FieldClass) -> SpaceTimeField {
        SpaceTimeField::from_analytic(AnalyticField::stationary(space), class, 1.0, 2, 64).unwrap()
    }

    #[test]
    fn phi_closed_form() {
        let rho = SpaceTimeProfile::from_fn(1.0, 11, 64, |_, _| 0.5).unwrap();
        let h = field(SpaceFn::Linear { intercept: 0.0, slope: 1.0 }, FieldClass::Free);
        assert!((phi(&rho, &h) - 0.25).abs() < 1e-12);
        let full = SpaceTimeProfile::from_fn(1.0, 11, 64, |_, u| if u < 0.5 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(phi(&full, &h), 0.0);
        assert_eq!(quadratic_cost(&rho, &h).to_bits(), phi(&rho, &h).to_bits());
    }

    #[test]
    fn constant_tilt_sees_only_mass_change() {
        let rho = SpaceTimeProfile::from_fn(1.0, 11, 64, |t, u| 0.3 + 0.1 * (PI * u).cos() * (-t).exp()).unwrap();
        let h = field(SpaceFn::Constant { value: 2.0 }, FieldClass::Free);
        assert!(ell(&rho, &h, WeakRegime::Neumann).unwrap().abs() < 1e-14);
    }

    #[test]
    fn two_forms_of_ell_agree() {
        let g = 2048;
        let rho = SpaceTimeProfile::from_fn(1.0, 21, g, |_, u| u).unwrap();
        let h = SpaceTimeField::from_analytic(
            AnalyticField::separable(TimePoly::linear(0.0, 1.0), SpaceFn::Sine { k: 1, amp: 1.0 }),
            FieldClass::DirichletZero,
            1.0,
            2,
            64,
        )
        .unwrap();
        let regime = WeakRegime::Dirichlet { alpha: 0.0, beta: 1.0 };
        let a = ell(&rho, &h, regime).unwrap();
        let b = ell_integrated(&rho, &h, regime).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn dirichlet_rejects_free_tilts() {
        let rho = SpaceTimeProfile::from_fn(1.0, 3, 16, |_, _| 0.5).unwrap();
        let h = field(SpaceFn::Cosine { k: 1, amp: 1.0 }, FieldClass::Free);
        assert!(matches!(
            ell(&rho, &h, WeakRegime::Dirichlet { alpha: 0.5, beta: 0.5 }),
            Err(Error::ClassMismatch(_))
        ));
    }

    #[test]
    fn mass_drift_gives_infinite_j() {
        let rho = SpaceTimeProfile::from_fn(1.0, 3, 16, |t, _| 0.4 + 0.1 * t).unwrap();
        let h = field(SpaceFn::Cosine { k: 1, amp: 1.0 }, FieldClass::Free);
        assert_eq!(j_functional(&rho, &h, WeakRegime::Neumann, 0.05).unwrap(), f64::INFINITY);
        assert!(j_functional(&rho, &h, WeakRegime::Neumann, 0.2).unwrap().is_finite());
    }

    #[test]
    fn energy_of_constants_is_minus_twice_the_norm() {
        let rho = SpaceTimeProfile::from_fn(1.0, 5, 128, |_, _| 0.7).unwrap();
        let h = field(SpaceFn::Sine { k: 2, amp: 1.0 }, FieldClass::DirichletZero);
        assert!((energy_single(&rho, &h) + 1.0).abs() < 1e-12);
        let zero = field(SpaceFn::Constant { value: 0.0 }, FieldClass::DirichletZero);
        assert_eq!(energy_single(&rho, &zero), 0.0);
    }

    #[test]
    fn energy_single_is_resolution_stable() {
        let bump = field(SpaceFn::Bump { center: 0.5, width: 0.3, amp: 1.0 }, FieldClass::DirichletZero);
        let e = |g| energy_single(&SpaceTimeProfile::from_fn(1.0, 3, g, |_, u| u).unwrap(), &bump);
        assert!((e(1024) - e(2048)).abs() < 1e-6);
    }

    #[test]
    fn fisher_matches_adaptive_quadrature() {
        let exact = integrate_adaptive(0.0, 1.0, 1e-13, |u| (1.0 / 16.0) / ((0.5 + u / 4.0) * (0.5 - u / 4.0)));
        let f = |g| fisher_energy(&SpaceTimeProfile::from_fn(1.0, 3, g, |_, u| 0.5 + u / 4.0).unwrap());
        let (a, b) = (f(256), f(512));
        assert!((a.value - b.value).abs() < 1e-4);
        assert!((b.value - exact).abs() < 1e-5, "{} vs {exact}", b.value);
        assert_eq!(b.capped_measure, 0.0);
        let flat = fisher_energy(&SpaceTimeProfile::from_fn(1.0, 3, 16, |_, _| 0.2).unwrap());
        assert!(flat.value < 1e-20);
    }
}
