use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmc::{run, CurrentCounter, Event, Observer};
use crate::lattice::Configuration;
use crate::params::ModelParams;
use crate::rng::replica_rng;

use super::ensemble::InitialLaw;

/// x - a - x·ln(x/a): the exponent of the Poisson(na) upper tail at nx.
pub fn poisson_ld_bound(x: f64, a: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::DomainError { what: "Poisson bound level", value: x });
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::DomainError { what: "Poisson bound mean", value: a });
    }
    Ok(x - a - x * (x / a).ln())
}

/// max(α,1-α) + max(β,1-β): total boundary flip rate in units of n^{2-θ}.
pub fn boundary_rate_constant(params: &ModelParams) -> f64 {
    let (a, b) = (params.alpha(), params.beta());
    a.max(1.0 - a) + b.max(1.0 - b)
}

/// exp{n·bound(λ, c·n^{1-θ}T)} above the mean, 1 below it.
pub fn poisson_tail_bound(n: usize, lambda: f64, c: f64, theta: f64, horizon: f64) -> Result<f64> {
    let nf = n as f64;
    let a = c * nf.powf(1.0 - theta) * horizon;
    if lambda <= a {
        return Ok(1.0);
    }
    Ok((nf * poisson_ld_bound(lambda, a)?).exp())
}

fn require_slow_boundary(params: &ModelParams) -> Result<()> {
    if params.theta() <= 1.0 {
        return Err(Error::ThetaRegime {
            theta: params.theta(),
            reason: "tail experiments need theta > 1",
        });
    }
    Ok(())
}

/// Frequency of an event over independent replicas with its analytic bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub lambda: f64,
    pub replicas: usize,
    pub hits: usize,
    pub frequency: f64,
    pub stderr: f64,
    pub bound: f64,
    /// (1/n)·ln(frequency); -∞ without hits.
    pub log_rate: f64,
}

impl TailReport {
    fn new(n: usize, lambda: f64, replicas: usize, hits: usize, bound: f64) -> Self {
        let m = replicas as f64;
        let frequency = hits as f64 / m;
        TailReport {
            n,
            lambda,
            replicas,
            hits,
            frequency,
            stderr: (frequency * (1.0 - frequency) / m).sqrt(),
            bound,
            log_rate: frequency.ln() / n as f64,
        }
    }

    /// frequency ≤ bound + 4·stderr.
    pub fn within_bound(&self) -> bool {
        self.frequency <= self.bound + 4.0 * self.stderr
    }
}

/// Largest |N_t - N_0| of the particle number along the path.
struct MassExcursion {
    start: i64,
    current: i64,
    max_dev: i64,
}

impl Observer for MassExcursion {
    fn on_event(&mut self, _: f64, e: Event, before: &Configuration) -> Result<()> {
        if !e.is_exchange() {
            self.current += if before.get(e.site as usize) == 0 { 1 } else { -1 };
            self.max_dev = self.max_dev.max((self.current - self.start).abs());
        }
        Ok(())
    }
}

/// Frequency of sup_t |⟨π_t,1⟩ - ⟨π_0,1⟩| > λ under the untilted dynamics.
pub fn mass_tail_experiment(
    params: &ModelParams,
    initial: &InitialLaw,
    lambda: f64,
    m: usize,
    seed: u64,
) -> Result<TailReport> {
    require_slow_boundary(params)?;
    let n = params.n();
    let bound = if lambda >= 1.0 {
        0.0
    } else {
        poisson_tail_bound(n, lambda, boundary_rate_constant(params), params.theta(), params.horizon())?
    };
    let threshold = lambda * n as f64;
    let hits = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = initial.draw(n, &mut rng)?;
            let p = init.particles() as i64;
            let mut obs = MassExcursion {
                start: p,
                current: p,
                max_dev: 0,
            };
            run(params, &init, None, &mut rng, &mut obs)?;
            Ok(usize::from(obs.max_dev as f64 > threshold))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(TailReport::new(n, lambda, m, hits, bound))
}

/// `mass_tail_experiment` at each n, with replica seeds shared across n.
pub fn mass_tail_table(
    params: &ModelParams,
    ns: &[usize],
    initial: &InitialLaw,
    lambda: f64,
    m: usize,
    seed: u64,
) -> Result<Vec<TailReport>> {
    ns.iter()
        .map(|&n| mass_tail_experiment(&params.with_n(n)?, initial, lambda, m, seed))
        .collect()
}

/// Tails of the boundary currents J_{0,1}(T)/n and J_{n-1,n}(T)/n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentTails {
    pub left: TailReport,
    pub right: TailReport,
}

/// Frequencies of J_{0,1}(T)/n > λ and J_{n-1,n}(T)/n > λ.
pub fn boundary_current_tail(
    params: &ModelParams,
    initial: &InitialLaw,
    lambda: f64,
    m: usize,
    seed: u64,
) -> Result<CurrentTails> {
    require_slow_boundary(params)?;
    let n = params.n();
    let threshold = lambda * n as f64;
    let counts = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = initial.draw(n, &mut rng)?;
            let mut obs = CurrentCounter::new(n);
            run(params, &init, None, &mut rng, &mut obs)?;
            Ok((
                usize::from(obs.left() as f64 > threshold),
                usize::from(obs.right() as f64 > threshold),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let left: usize = counts.iter().map(|c| c.0).sum();
    let right: usize = counts.iter().map(|c| c.1).sum();
    let bound = poisson_tail_bound(n, lambda, boundary_rate_constant(params), params.theta(), params.horizon())?;
    Ok(CurrentTails {
        left: TailReport::new(n, lambda, m, left, bound),
        right: TailReport::new(n, lambda, m, right, bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use crate::profile::Profile;

    #[test]
    fn poisson_bound_values() {
        assert_eq!(poisson_ld_bound(0.7, 0.7).unwrap(), 0.0);
        let v = poisson_ld_bound(2.0, 1.0).unwrap();
        assert!((v - (1.0 - 2.0 * 2f64.ln())).abs() < 1e-15);
        assert!(matches!(poisson_ld_bound(0.0, 1.0), Err(Error::DomainError { .. })));
        assert!(matches!(poisson_ld_bound(1.0, -1.0), Err(Error::DomainError { .. })));
    }

    #[test]
    fn poisson_bound_negative_off_tangency() {
        for i in 1..40 {
            for j in 1..40 {
                let (x, a) = (0.1 * i as f64, 0.1 * j as f64);
                let v = poisson_ld_bound(x, a).unwrap();
                if i == j {
                    assert!(v.abs() < 1e-15);
                } else {
                    assert!(v < 0.0, "({x},{a}) -> {v}");
                }
            }
        }
    }

    #[test]
    fn regime_is_enforced() {
        let p = validate_params(16, 1.0, 0.3, 0.6, 0.1).unwrap();
        let law = InitialLaw::Fixed(Configuration::empty(16));
        assert!(matches!(
            mass_tail_experiment(&p, &law, 0.1, 4, 0),
            Err(Error::ThetaRegime { .. })
        ));
        assert!(matches!(
            boundary_current_tail(&p, &law, 0.1, 4, 0),
            Err(Error::ThetaRegime { .. })
        ));
    }

    #[test]
    fn mass_cannot_move_by_one() {
        let p = validate_params(16, 1.5, 0.3, 0.6, 0.1).unwrap();
        let law = InitialLaw::Bernoulli(Profile::constant(16, 0.5).unwrap());
        let r = mass_tail_experiment(&p, &law, 1.0, 20, 2).unwrap();
        assert_eq!(r.hits, 0);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn current_frequency_nonincreasing_in_lambda() {
        let p = validate_params(16, 1.5, 0.9, 0.1, 0.2).unwrap();
        let law = InitialLaw::Fixed(Configuration::empty(16));
        let mut prev = f64::INFINITY;
        for lambda in [0.0f64, 0.05, 0.1, 0.2] {
            let r = boundary_current_tail(&p, &law, lambda.max(1e-9), 200, 4).unwrap();
            assert!(r.left.frequency <= prev);
            assert!(r.left.within_bound() && r.right.within_bound());
            prev = r.left.frequency;
        }
    }
}
