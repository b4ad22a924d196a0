use crate::error::{Error, Result};
use crate::profile::Profile;

/// RK4 substeps per grid interval in the shooting integration.
const SUBSTEPS: usize = 16;

/// Stationary solution of the perturbed Dirichlet problem for a
/// time-independent tilt with gradient `dh`: the flux J = -ρ' + 2χ(ρ)H' is
/// constant, so ρ' = 2χ(ρ)H' - J with ρ(0) = α, and J is found by bisection
/// on ρ(1) = β.
pub fn stationary_dirichlet(alpha: f64, beta: f64, dh: impl Fn(f64) -> f64, intervals: usize) -> Result<Profile> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                reason: "boundary density must lie in [0,1]",
            });
        }
    }
    if intervals < 2 {
        return Err(Error::Invalid("grid needs at least 2 intervals".into()));
    }
    let rhs = |u: f64, r: f64, j: f64| 2.0 * r * (1.0 - r) * dh(u) - j;
    // Integrates from u = 0; returns None if ρ leaves [0,1], with the side.
    let shoot = |j: f64, out: Option<&mut Vec<f64>>| -> std::result::Result<f64, f64> {
        let h = 1.0 / (intervals * SUBSTEPS) as f64;
        let mut r = alpha;
        let mut nodes = Vec::with_capacity(intervals + 1);
        nodes.push(r);
        for s in 0..intervals * SUBSTEPS {
            let u = s as f64 * h;
            let k1 = rhs(u, r, j);
            let k2 = rhs(u + 0.5 * h, r + 0.5 * h * k1, j);
            let k3 = rhs(u + 0.5 * h, r + 0.5 * h * k2, j);
            let k4 = rhs(u + h, r + h * k3, j);
            r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if r > 1.0 {
                return Err(f64::INFINITY);
            }
            if r < 0.0 {
                return Err(f64::NEG_INFINITY);
            }
            if (s + 1) % SUBSTEPS == 0 {
                nodes.push(r);
            }
        }
        if let Some(o) = out {
            *o = nodes;
        }
        Ok(r)
    };
    let end = |j: f64| shoot(j, None).unwrap_or_else(|side| side);
    // ρ(1) decreases in J.
    let mut width = 1.0;
    let (mut lo, mut hi) = (-width, width);
    while !(end(lo) >= beta && end(hi) <= beta) {
        width *= 2.0;
        if width > 1e6 {
            return Err(Error::Invalid("no stationary profile found".into()));
        }
        lo = -width;
        hi = width;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if end(mid) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut nodes = Vec::new();
    shoot(0.5 * (lo + hi), Some(&mut nodes)).map_err(|_| Error::Invalid("no stationary profile found".into()))?;
    let g = nodes.len() - 1;
    nodes[g] = beta;
    Profile::new(nodes)
}
