use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmc::{run, EventLog, SnapshotRecorder, Tilt, Trajectory};
use crate::lattice::{deterministic_config, sample_bernoulli_with, Configuration};
use crate::params::ModelParams;
use crate::profile::Profile;
use crate::quad::mean_var;
use crate::rng::{replica_rng, SimRng};

use super::weights::RnWeight;

/// Law of the initial configuration of each replica.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Fixed(Configuration),
    /// Quantile rounding of γ; the same configuration for every replica.
    Deterministic(Profile),
    /// Bernoulli product with marginals γ, drawn from the replica stream.
    Bernoulli(Profile),
}

impl InitialLaw {
    pub fn draw(&self, n: usize, rng: &mut SimRng) -> Result<Configuration> {
        match self {
            InitialLaw::Fixed(c) => {
                if c.n() != n {
                    return Err(Error::Invalid(format!("initial configuration has n = {}, expected {n}", c.n())));
                }
                Ok(c.clone())
            }
            InitialLaw::Deterministic(p) => deterministic_config(p, n),
            InitialLaw::Bernoulli(p) => sample_bernoulli_with(p.as_fn(), n, rng),
        }
    }
}

/// A tilted trajectory with its log-weight log(dP/dP^{H,G}).
#[derive(Debug, Clone)]
pub struct WeightedSample {
    pub trajectory: Trajectory,
    pub log_weight: f64,
}

/// Replicas sampled under the tilted law, each carrying its weight.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    pub samples: Vec<WeightedSample>,
    pub tilt: Tilt,
    pub seed: u64,
}

impl WeightedEnsemble {
    /// Simulates `m` replicas with full event logs and snapshots at
    /// `schedule`; replica i uses stream i of `seed`.
    pub fn sample(
        params: &ModelParams,
        initial: &InitialLaw,
        tilt: &Tilt,
        schedule: &[f64],
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let samples = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(seed, i as u64);
                let init = initial.draw(params.n(), &mut rng)?;
                let mut obs = (
                    EventLog::default(),
                    SnapshotRecorder::new(schedule.to_vec())?,
                    RnWeight::new(params, tilt, &init),
                );
                let last = run(params, &init, Some(tilt), &mut rng, &mut obs)?;
                let (log, snaps, w) = obs;
                let trajectory = Trajectory::from_parts(
                    *params,
                    init,
                    seed,
                    schedule.to_vec(),
                    log.events,
                    snaps.into_snapshots(),
                    last,
                );
                Ok(WeightedSample {
                    trajectory,
                    log_weight: w.value().expect("finished"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WeightedEnsemble {
            samples,
            tilt: tilt.clone(),
            seed,
        })
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.log_weight).collect()
    }

    /// Sample mean and standard error of the weights exp(log_weight).
    pub fn weight_mean(&self) -> (f64, f64) {
        let w: Vec<f64> = self.samples.iter().map(|s| s.log_weight.exp()).collect();
        mean_with_stderr(&w)
    }
}

fn mean_with_stderr(values: &[f64]) -> (f64, f64) {
    let (mean, var) = mean_var(values);
    (mean, (var / values.len() as f64).sqrt())
}

/// Log-weights of `m` tilted replicas, streamed without storing paths.
pub fn tilted_log_weights(
    params: &ModelParams,
    initial: &InitialLaw,
    tilt: &Tilt,
    m: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = initial.draw(params.n(), &mut rng)?;
            let mut w = RnWeight::new(params, tilt, &init);
            run(params, &init, Some(tilt), &mut rng, &mut w)?;
            Ok(w.value().expect("finished"))
        })
        .collect()
}

/// Monte Carlo estimate of (1/n)·E^H[log(dP^H/dP)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub n: usize,
    pub replicas: usize,
    pub value: f64,
    pub stderr: f64,
    /// Mean of the weights dP/dP^H; 1 up to Monte Carlo error.
    pub weight_mean: f64,
    pub weight_stderr: f64,
}

/// -(1/n) times the mean log-weight over `m` tilted replicas.
pub fn relative_entropy_rate(
    params: &ModelParams,
    initial: &InitialLaw,
    tilt: &Tilt,
    m: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    if m < 2 {
        return Err(Error::OutOfRange {
            name: "replicas",
            value: m as f64,
            reason: "need at least two replicas for a standard error",
        });
    }
    let logs = tilted_log_weights(params, initial, tilt, m, seed)?;
    let nf = params.n() as f64;
    let scaled: Vec<f64> = logs.iter().map(|l| -l / nf).collect();
    let (value, stderr) = mean_with_stderr(&scaled);
    let weights: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let (weight_mean, weight_stderr) = mean_with_stderr(&weights);
    Ok(EntropyEstimate {
        n: params.n(),
        replicas: m,
        value,
        stderr,
        weight_mean,
        weight_stderr,
    })
}

/// Importance-sampling estimate of an untilted probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Σ 1_A w / Σ w.
    pub self_normalized: f64,
    pub hits: usize,
    pub replicas: usize,
}

/// P[A] = E^H[1_A · dP/dP^H] with A read off the snapshots at `schedule`.
pub fn importance_probability(
    params: &ModelParams,
    initial: &InitialLaw,
    tilt: &Tilt,
    schedule: &[f64],
    predicate: &(dyn Fn(&[Configuration]) -> bool + Sync),
    m: usize,
    seed: u64,
) -> Result<ImportanceEstimate> {
    if m == 0 {
        return Err(Error::OutOfRange {
            name: "replicas",
            value: 0.0,
            reason: "need at least one replica",
        });
    }
    let draws = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = initial.draw(params.n(), &mut rng)?;
            let mut obs = (SnapshotRecorder::new(schedule.to_vec())?, RnWeight::new(params, tilt, &init));
            run(params, &init, Some(tilt), &mut rng, &mut obs)?;
            let (snaps, w) = obs;
            Ok((predicate(snaps.snapshots()), w.value().expect("finished").exp()))
        })
        .collect::<Result<Vec<(bool, f64)>>>()?;
    let hits = draws.iter().filter(|d| d.0).count();
    let terms: Vec<f64> = draws.iter().map(|&(a, w)| if a { w } else { 0.0 }).collect();
    let (estimate, stderr) = mean_with_stderr(&terms);
    let total: f64 = draws.iter().map(|d| d.1).sum();
    let self_normalized = if hits == 0 { 0.0 } else { terms.iter().sum::<f64>() / total };
    Ok(ImportanceEstimate {
        estimate,
        stderr,
        self_normalized,
        hits,
        replicas: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, FieldClass, SpaceFn, SpaceTimeField};
    use crate::ldp::rn_log_weight;
    use crate::params::validate_params;

    fn cos_tilt(amp: f64, horizon: f64) -> Tilt {
        let f = AnalyticField::stationary(SpaceFn::Cosine { k: 1, amp });
        Tilt::new(SpaceTimeField::from_analytic(f, FieldClass::Free, horizon, 2, 64).unwrap())
    }

    #[test]
    fn zero_tilt_has_zero_entropy() {
        let p = validate_params(16, 2.0, 0.3, 0.6, 0.05).unwrap();
        let law = InitialLaw::Deterministic(Profile::constant(64, 0.5).unwrap());
        let e = relative_entropy_rate(&p, &law, &cos_tilt(0.0, 0.05), 8, 1).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.weight_mean, 1.0);
    }

    #[test]
    fn stored_weights_match_replay() {
        let p = validate_params(12, 0.5, 0.3, 0.6, 0.05).unwrap();
        let tilt = cos_tilt(0.8, 0.05);
        let law = InitialLaw::Bernoulli(Profile::constant(32, 0.4).unwrap());
        let ens = WeightedEnsemble::sample(&p, &law, &tilt, &[0.05], 6, 9).unwrap();
        for s in &ens.samples {
            assert_eq!(rn_log_weight(&s.trajectory, &tilt).unwrap(), s.log_weight);
        }
        let logs = tilted_log_weights(&p, &law, &tilt, 6, 9).unwrap();
        assert_eq!(logs, ens.log_weights());
    }

    #[test]
    fn entropy_is_nonnegative_and_weights_average_to_one() {
        let p = validate_params(16, 2.0, 0.3, 0.6, 0.05).unwrap();
        let law = InitialLaw::Deterministic(Profile::constant(64, 0.5).unwrap());
        let e = relative_entropy_rate(&p, &law, &cos_tilt(1.0, 0.05), 400, 3).unwrap();
        assert!(e.value > 0.0);
        assert!((e.weight_mean - 1.0).abs() <= 4.0 * e.weight_stderr);
    }

    #[test]
    fn trivial_predicates() {
        let p = validate_params(8, 0.5, 0.3, 0.6, 0.05).unwrap();
        let law = InitialLaw::Fixed(Configuration::empty(8));
        let tilt = cos_tilt(0.5, 0.05);
        let never = importance_probability(&p, &law, &tilt, &[0.05], &|_| false, 50, 1).unwrap();
        assert_eq!(never.estimate, 0.0);
        assert_eq!(never.self_normalized, 0.0);
        let always = importance_probability(&p, &law, &tilt, &[0.05], &|_| true, 500, 1).unwrap();
        assert!((always.estimate - 1.0).abs() <= 4.0 * always.stderr);
        assert!((always.self_normalized - 1.0).abs() < 1e-12);
    }
}
