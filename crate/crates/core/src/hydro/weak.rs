use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::profile::SpaceTimeProfile;
use crate::quad::{gregory_weights, simpson};

/// Boundary regime of a weak solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeakRegime {
    /// Test functions vanish at both ends; ρ takes the values α, β there.
    Dirichlet { alpha: f64, beta: f64 },
    /// Arbitrary smooth test functions; ρ is read at the end nodes.
    Neumann,
}

/// Weak-formulation residual of ρ against the test function f up to time t:
///
/// ⟨ρ_t,f_t⟩ - ⟨ρ_0,f_0⟩ - ∫⟨ρ_s,(∂_s+Δ)f_s⟩ds + ∫B_s ds - 2∫⟨χ(ρ_s)∂_uH_s,∂_uf_s⟩ds
///
/// with B = β∂_uf(1) - α∂_uf(0) (Dirichlet) or ρ(1)∂_uf(1) - ρ(0)∂_uf(0)
/// (Neumann). The drift term is present only when `h` is given; Robin
/// solutions satisfy the Neumann form with drift.
///
/// Space integrals use the trapezoid rule on the profile nodes, the time
/// integral composite Simpson on the output rows; t must be one of them.
pub fn weak_residual(
    rho: &SpaceTimeProfile,
    f: &SpaceTimeField,
    regime: WeakRegime,
    h: Option<&SpaceTimeField>,
    t: f64,
) -> Result<f64> {
    if let WeakRegime::Dirichlet { .. } = regime {
        if !f.vanishes_on_boundary() {
            return Err(Error::ClassMismatch(
                "Dirichlet weak form needs a test function vanishing at the ends".into(),
            ));
        }
    }
    let kt = time_index(rho, t)?;
    let g = rho.intervals();
    let du = rho.du();
    let w = gregory_weights(g + 1, du);
    let node = |i: usize| i as f64 * du;

    let pair = |k: usize| -> f64 {
        let s = rho.time(k);
        rho.row(k).iter().enumerate().map(|(i, r)| w[i] * r * f.value(s, node(i))).sum()
    };

    let integrand: Vec<f64> = (0..=kt)
        .map(|k| {
            let s = rho.time(k);
            let row = rho.row(k);
            let mut bulk = 0.0;
            for (i, &r) in row.iter().enumerate() {
                let u = node(i);
                let mut v = r * (f.dt(s, u) + f.duu(s, u));
                if let Some(hf) = h {
                    v -= 2.0 * r * (1.0 - r) * hf.du(s, u) * f.du(s, u);
                }
                bulk += w[i] * v;
            }
            let (left, right) = match regime {
                WeakRegime::Dirichlet { alpha, beta } => (alpha, beta),
                WeakRegime::Neumann => (row[0], row[g]),
            };
            let boundary = right * f.du(s, 1.0) - left * f.du(s, 0.0);
            -bulk + boundary
        })
        .collect();
    Ok(pair(kt) - pair(0) + simpson(&integrand, rho.dt()))
}

fn time_index(rho: &SpaceTimeProfile, t: f64) -> Result<usize> {
    if t == 0.0 || rho.n_times() == 1 {
        return if t == 0.0 {
            Ok(0)
        } else {
            Err(Error::Invalid(format!("profile has a single time row; t = {t}")))
        };
    }
    let x = t / rho.dt();
    let k = x.round();
    if (x - k).abs() > 1e-9 * x.max(1.0) || k < 0.0 || k as usize >= rho.n_times() {
        return Err(Error::Invalid(format!("t = {t} is not an output time of the profile")));
    }
    Ok(k as usize)
}
