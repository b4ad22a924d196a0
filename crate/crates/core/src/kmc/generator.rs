use nalgebra::{DMatrix, DVector};

use super::rates::{Rates, Tilt};
use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::params::ModelParams;

/// Largest number of sites the dense oracle accepts (4096 states).
pub const MAX_ORACLE_SITES: usize = 12;

/// Dense generator of the accelerated chain on {0,1}^{n-1}, tilt frozen at
/// time t. Entry (i, j) is the rate from state i to state j, where states are
/// indexed by [`Configuration::state_index`]; rows sum to zero.
pub fn exact_generator_small_n(params: &ModelParams, tilt: Option<&Tilt>, t: f64) -> Result<DMatrix<f64>> {
    let sites = params.sites();
    if sites > MAX_ORACLE_SITES {
        return Err(Error::TooLarge {
            sites,
            cap: MAX_ORACLE_SITES,
        });
    }
    let n = params.n();
    let dim = 1usize << sites;
    let rates = Rates::new(params, tilt);
    let mut q = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let c = Configuration::from_state_index(n, i);
        let mut out = 0.0;
        for x in 1..=n - 2 {
            if c.discordant(x) {
                let s = c.get(x) as f64 - c.get(x + 1) as f64;
                let j = i ^ (0b11 << (x - 1));
                let r = rates.bond(t, x, s);
                q[(i, j)] += r;
                out += r;
            }
        }
        for site in [1, n - 1] {
            let j = i ^ (1 << (site - 1));
            let r = rates.flip(t, site, c.get(site));
            q[(i, j)] += r;
            out += r;
        }
        q[(i, i)] = -out;
    }
    Ok(q)
}

/// Bernoulli(ρ) product probabilities over the state index.
pub fn product_measure(n: usize, rho: f64) -> Vec<f64> {
    let sites = n - 1;
    (0..1usize << sites)
        .map(|i| {
            let k = i.count_ones() as i32;
            rho.powi(k) * (1.0 - rho).powi(sites as i32 - k)
        })
        .collect()
}

/// Law at time t of the chain started from `p0` (a probability vector over
/// the state index). Time-independent dynamics uses the matrix exponential;
/// otherwise the forward equation is integrated by classical RK4 with a step
/// well inside the stability region.
pub fn transient_distribution(params: &ModelParams, tilt: Option<&Tilt>, p0: &[f64], t: f64) -> Result<Vec<f64>> {
    let q0 = exact_generator_small_n(params, tilt, 0.0)?;
    if p0.len() != q0.nrows() {
        return Err(Error::Invalid(format!(
            "initial law has {} entries, state space has {}",
            p0.len(),
            q0.nrows()
        )));
    }
    let p = DVector::from_column_slice(p0);
    let time_independent = tilt.is_none_or(Tilt::is_time_independent);
    if time_independent {
        let e = (q0.transpose() * t).exp();
        return Ok((e * p).iter().copied().collect());
    }
    let max_rate = (0..q0.nrows()).map(|i| -q0[(i, i)]).fold(0.0, f64::max);
    let steps = ((t * max_rate * 2.0 * 40.0).ceil() as usize).max(200);
    let h = t / steps as f64;
    let qt = |s: f64| -> Result<DMatrix<f64>> { Ok(exact_generator_small_n(params, tilt, s)?.transpose()) };
    let mut p = p;
    for k in 0..steps {
        let s = k as f64 * h;
        let a = qt(s)?;
        let b = qt(s + 0.5 * h)?;
        let c = qt(s + h)?;
        let k1 = &a * &p;
        let k2 = &b * (&p + &k1 * (0.5 * h));
        let k3 = &b * (&p + &k2 * (0.5 * h));
        let k4 = &c * (&p + &k3 * h);
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(p.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;

    #[test]
    fn rows_sum_to_zero() {
        let p = validate_params(6, 0.7, 0.2, 0.9, 1.0).unwrap();
        let q = exact_generator_small_n(&p, None, 0.0).unwrap();
        for i in 0..q.nrows() {
            assert!(q.row(i).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn hand_enumerated_three_site_chain() {
        // n = 3, θ = 0: sites 1, 2; one bond at rate 9, flips at 9 r / 9 (1 - r).
        let p = validate_params(3, 0.0, 0.2, 0.6, 1.0).unwrap();
        let q = exact_generator_small_n(&p, None, 0.0).unwrap();
        // index bits: bit0 = η(1), bit1 = η(2)
        assert!((q[(0b01, 0b10)] - 9.0).abs() < 1e-12);
        assert!((q[(0b10, 0b01)] - 9.0).abs() < 1e-12);
        assert!((q[(0b00, 0b01)] - 9.0 * 0.2).abs() < 1e-12);
        assert!((q[(0b00, 0b10)] - 9.0 * 0.6).abs() < 1e-12);
        assert!((q[(0b11, 0b10)] - 9.0 * 0.8).abs() < 1e-12);
        assert!((q[(0b11, 0b01)] - 9.0 * 0.4).abs() < 1e-12);
        assert_eq!(q[(0b00, 0b11)], 0.0);
    }

    #[test]
    fn bernoulli_product_is_invariant_at_equal_densities() {
        let p = validate_params(6, 1.3, 0.35, 0.35, 1.0).unwrap();
        let q = exact_generator_small_n(&p, None, 0.0).unwrap();
        let mu = DVector::from_vec(product_measure(6, 0.35));
        let left = q.transpose() * mu;
        assert!(left.amax() < 1e-12);
    }

    #[test]
    fn too_large_is_rejected() {
        let p = validate_params(14, 0.5, 0.5, 0.5, 1.0).unwrap();
        assert!(matches!(
            exact_generator_small_n(&p, None, 0.0),
            Err(Error::TooLarge { sites: 13, cap: 12 })
        ));
    }

    #[test]
    fn transient_law_is_a_probability_vector() {
        let p = validate_params(4, 0.5, 0.2, 0.8, 0.3).unwrap();
        let mut p0 = vec![0.0; 8];
        p0[0] = 1.0;
        let pt = transient_distribution(&p, None, &p0, 0.3).unwrap();
        assert!((pt.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(pt.iter().all(|&v| v > -1e-12));
    }
}
