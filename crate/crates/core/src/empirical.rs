//! Readouts of configurations as measures and densities: pairings, box
//! averages, mollifications and the bond-discordance measure.

use crate::error::{Error, Result};
use crate::kmc::Trajectory;
use crate::lattice::Configuration;
use crate::profile::Profile;
use crate::quad::integrate;

/// ⟨π^n, f⟩ = (1/n) Σ_x η(x) f(x/n).
pub fn pairing(config: &Configuration, f: impl Fn(f64) -> f64) -> f64 {
    let n = config.n() as f64;
    let s: f64 = (1..config.n())
        .filter(|&x| config.get(x) == 1)
        .map(|x| f(x as f64 / n))
        .sum();
    s / n
}

/// Total mass ⟨π^n, 1⟩.
pub fn mass(config: &Configuration) -> f64 {
    config.particles() as f64 / config.n() as f64
}

/// ⌊εn⌋, required to be at least one.
pub fn box_size(n: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            reason: "must be positive",
        });
    }
    let k = (eps * n as f64).floor() as usize;
    if k == 0 {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            reason: "box size floor(eps n) is zero",
        });
    }
    Ok(k)
}

/// η^{εn}(x): the mean of the ⌊εn⌋ sites to the right of x when
/// x ≤ n-1-⌊εn⌋, otherwise of the ⌊εn⌋ sites to its left.
pub fn box_average(config: &Configuration, x: usize, eps: f64) -> Result<f64> {
    let n = config.n();
    let k = box_size(n, eps)?;
    let range = box_range(n, x, k)?;
    let s: usize = range.map(|y| config.get(y) as usize).sum();
    Ok(s as f64 / k as f64)
}

pub(crate) fn box_range(n: usize, x: usize, k: usize) -> Result<std::ops::RangeInclusive<usize>> {
    let last = n - 1;
    if x == 0 || x > last {
        return Err(Error::BoxOutOfRange { site: x, size: k, last });
    }
    if x + k <= last {
        Ok(x + 1..=x + k)
    } else if x > k {
        Ok(x - k..=x - 1)
    } else {
        Err(Error::BoxOutOfRange { site: x, size: k, last })
    }
}

/// Mollification kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// One-sided box ι_ε: right window on [0, 1-ε), left window after.
    Box,
    /// Smooth bump (1/τ) f(·/τ), f supported in [1/4, 3/4].
    Smooth,
}

/// Normalising constant of the bump, c = 1 / ∫ exp(-1/(1-(4u-2)²)) du.
pub const BUMP_NORMALISER: f64 = 9.009_134_484_174_324;

/// The bump f(u) = c·exp(-1/(1-(4u-2)²)) on (1/4, 3/4), zero elsewhere.
/// Nonnegative, bounded by 4, of unit mass and symmetric about 1/2.
pub fn bump(u: f64) -> f64 {
    let s = 4.0 * u - 2.0;
    if s.abs() >= 1.0 {
        0.0
    } else {
        BUMP_NORMALISER * (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Panels for the smooth convolution quadrature.
const SMOOTH_PANELS: usize = 64;

fn reflect(u: f64) -> f64 {
    // Even reflection across 0 and 1; arguments stay within [-1, 2].
    let v = if u < 0.0 { -u } else { u };
    if v > 1.0 {
        2.0 - v
    } else {
        v
    }
}

/// Mollifies a profile, returning a profile on the same grid.
///
/// Box: (1/ε)∫_u^{u+ε} ρ for u < 1-ε, (1/ε)∫_{u-ε}^u ρ otherwise, computed
/// exactly for the piecewise-linear interpolant. Smooth: ∫ ρ(u-v)(1/τ)f(v/τ)dv
/// with even reflection of ρ at 0 and 1.
pub fn mollify(profile: &Profile, eps: f64, kind: Kernel) -> Result<Profile> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            reason: "must lie in (0, 1/2)",
        });
    }
    let g = profile.intervals();
    let values = (0..=g)
        .map(|i| {
            let u = i as f64 / g as f64;
            match kind {
                Kernel::Box => {
                    let (a, b) = if u < 1.0 - eps { (u, u + eps) } else { (u - eps, u) };
                    (profile.cumulative(b) - profile.cumulative(a)) / eps
                }
                Kernel::Smooth => smooth_at(|v| profile.eval(reflect(v)), u, eps),
            }
        })
        .map(|v: f64| v.clamp(0.0, 1.0))
        .collect();
    Profile::new(values)
}

fn smooth_at(rho: impl Fn(f64) -> f64, u: f64, tau: f64) -> f64 {
    let mass = integrate(0.25 * tau, 0.75 * tau, SMOOTH_PANELS, |v| bump(v / tau) / tau);
    integrate(0.25 * tau, 0.75 * tau, SMOOTH_PANELS, |v| rho(u - v) * bump(v / tau) / tau) / mass
}

/// The empirical measure mollified on a grid with `intervals` cells.
///
/// Box: (1/ε)·(1/n)·#{occupied x : x/n in the window of u}. Smooth:
/// (1/n) Σ_x η(x) k_τ(u - x/n) with the reflected kernel. Values are
/// densities and may slightly exceed 1 from lattice counting.
pub fn mollify_empirical(config: &Configuration, eps: f64, kind: Kernel, intervals: usize) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            reason: "must lie in (0, 1/2)",
        });
    }
    let n = config.n();
    let nf = n as f64;
    let occupied: Vec<f64> = (1..n).filter(|&x| config.get(x) == 1).map(|x| x as f64 / nf).collect();
    Ok((0..=intervals)
        .map(|i| {
            let u = i as f64 / intervals as f64;
            match kind {
                Kernel::Box => {
                    let inside = |v: f64| {
                        if u < 1.0 - eps {
                            v > u && v < u + eps
                        } else {
                            v > u - eps && v < u
                        }
                    };
                    occupied.iter().filter(|&&v| inside(v)).count() as f64 / (eps * nf)
                }
                Kernel::Smooth => {
                    // Images at -v and 2-v implement the even reflection.
                    let k = |w: f64| bump(w / eps) / eps;
                    occupied
                        .iter()
                        .map(|&v| k(u - v) + k(u + v) + k(u - (2.0 - v)))
                        .sum::<f64>()
                        / nf
                }
            }
        })
        .collect())
}

/// χ^n(du) = (1/2n) Σ_{x=1}^{n-2} (η(x)-η(x+1))² δ_{x/n}.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMeasure {
    n: usize,
    atoms: Vec<usize>,
}

impl ChiMeasure {
    /// Bond positions x carrying an atom.
    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn atom_mass(&self) -> f64 {
        0.5 / self.n as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.len() as f64 * self.atom_mass()
    }

    pub fn pairing(&self, f: impl Fn(f64) -> f64) -> f64 {
        let nf = self.n as f64;
        self.atoms.iter().map(|&x| f(x as f64 / nf)).sum::<f64>() * self.atom_mass()
    }
}

pub fn chi_bond_field(config: &Configuration) -> ChiMeasure {
    let n = config.n();
    ChiMeasure {
        n,
        atoms: (1..=n - 2).filter(|&x| config.discordant(x)).collect(),
    }
}

/// Box-averaged density of a configuration on a grid with `intervals`
/// cells: node u reads η^{εn}(x) at the nearest site x = clamp(round(un)).
pub fn density_of(config: &Configuration, eps: f64, intervals: usize) -> Result<Profile> {
    let n = config.n();
    let k = box_size(n, eps)?;
    // Prefix sums make each readout O(1).
    let mut prefix = vec![0usize; n];
    for x in 1..n {
        prefix[x] = prefix[x - 1] + config.get(x) as usize;
    }
    let values = (0..=intervals)
        .map(|i| {
            let u = i as f64 / intervals as f64;
            let x = ((u * n as f64).round() as usize).clamp(1, n - 1);
            let r = box_range(n, x, k)?;
            Ok((prefix[*r.end()] - prefix[*r.start() - 1]) as f64 / k as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Profile::new(values)
}

/// Density estimate of a trajectory at time t.
pub fn density_estimate(traj: &Trajectory, t: f64, eps: f64, intervals: usize) -> Result<Profile> {
    if !(0.0..=traj.params().horizon()).contains(&t) {
        return Err(Error::Invalid(format!("time {t} outside the trajectory horizon")));
    }
    density_of(&traj.state_at(t), eps, intervals)
}
