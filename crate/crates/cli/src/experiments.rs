//! Experiment drivers shared by the subcommands and the acceptance suite.
//! Replica results are gathered in index order before any reduction, so
//! every output is independent of the worker count.

use rayon::prelude::*;
use serde::Serialize;

use epsb::empirical::{mollify, mollify_empirical, Kernel};
use epsb::hydro::{solve, BoundarySpec, Grid};
use epsb::kmc::{run, transient_distribution, Event, Observer, SnapshotRecorder, Tilt};
use epsb::ldp::InitialLaw;
use epsb::rng::replica_rng;
use epsb::{Configuration, ModelParams, Profile, Result};

/// Largest |N_t - N_0| of the particle number along a path.
#[derive(Debug, Default)]
pub struct MassDrift {
    offset: i64,
    max: i64,
}

impl MassDrift {
    pub fn max_particles(&self) -> i64 {
        self.max
    }
}

impl Observer for MassDrift {
    fn on_event(&mut self, _: f64, e: Event, before: &Configuration) -> Result<()> {
        if !e.is_exchange() {
            self.offset += if before.get(e.site as usize) == 0 { 1 } else { -1 };
            self.max = self.max.max(self.offset.abs());
        }
        Ok(())
    }
}

/// Replica-averaged mollified densities against the mollified PDE solution.
#[derive(Debug, Clone, Serialize)]
pub struct HydroLimit {
    pub times: Vec<f64>,
    /// Averaged empirical densities, one row per time.
    pub empirical: Vec<Vec<f64>>,
    /// The PDE solution mollified with the same kernel.
    pub reference: Vec<Vec<f64>>,
    pub l1: Vec<f64>,
    /// sup over replicas and times of |⟨π_t,1⟩ - ⟨π_0,1⟩|.
    pub max_mass_drift: f64,
}

impl HydroLimit {
    pub fn max_l1(&self) -> f64 {
        self.l1.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,u,empirical,pde\n");
        for (k, t) in self.times.iter().enumerate() {
            let g = self.empirical[k].len() - 1;
            for i in 0..=g {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    t,
                    i as f64 / g as f64,
                    self.empirical[k][i],
                    self.reference[k][i]
                ));
            }
        }
        s
    }
}

/// Simulates `m` untilted replicas and compares the smooth-kernel density
/// at `snapshots` equally spaced times with the solution of `bc`.
#[allow(clippy::too_many_arguments)]
pub fn hydro_limit(
    params: &ModelParams,
    law: &InitialLaw,
    gamma: &Profile,
    bc: &BoundarySpec,
    m: usize,
    seed: u64,
    eps: f64,
    intervals: usize,
    snapshots: usize,
) -> Result<HydroLimit> {
    let horizon = params.horizon();
    let times: Vec<f64> = (1..=snapshots).map(|k| horizon * k as f64 / snapshots as f64).collect();
    let per_replica = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = law.draw(params.n(), &mut rng)?;
            let mut obs = (SnapshotRecorder::new(times.clone())?, MassDrift::default());
            run(params, &init, None, &mut rng, &mut obs)?;
            let (snaps, drift) = obs;
            let rows = snaps
                .snapshots()
                .iter()
                .map(|c| mollify_empirical(c, eps, Kernel::Smooth, intervals))
                .collect::<Result<Vec<_>>>()?;
            Ok((rows, drift.max_particles()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut empirical = vec![vec![0.0; intervals + 1]; snapshots];
    let mut max_particles = 0;
    for (rows, drift) in &per_replica {
        for (acc, row) in empirical.iter_mut().zip(rows) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        max_particles = max_particles.max(*drift);
    }
    for row in &mut empirical {
        for a in row.iter_mut() {
            *a /= m as f64;
        }
    }
    let pde = solve(gamma, bc, &Grid::new(intervals, horizon, snapshots + 1))?;
    let reference = (1..=snapshots)
        .map(|k| Ok(mollify(&pde.profile(k), eps, Kernel::Smooth)?.into_values()))
        .collect::<Result<Vec<_>>>()?;
    let l1 = empirical
        .iter()
        .zip(&reference)
        .map(|(e, r)| l1_distance(e, r))
        .collect();
    Ok(HydroLimit {
        times,
        empirical,
        reference,
        l1,
        max_mass_drift: max_particles as f64 / params.n() as f64,
    })
}

/// Trapezoid L¹ distance of two nodal profiles on [0,1].
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let g = a.len() - 1;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    (d.iter().sum::<f64>() - 0.5 * (d[0] + d[g])) / g as f64
}

/// Time-T law of a small system: simulated frequencies against the
/// matrix-exponential solution.
#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub empirical: Vec<f64>,
    pub exact: Vec<f64>,
    pub tv: f64,
}

impl OracleComparison {
    pub fn to_csv(&self, n: usize) -> String {
        let mut s = String::from("state,configuration,empirical,exact\n");
        for (i, (e, x)) in self.empirical.iter().zip(&self.exact).enumerate() {
            s.push_str(&format!("{i},{},{e},{x}\n", Configuration::from_state_index(n, i)));
        }
        s
    }
}

/// Distribution of the initial law over the 2^{n-1} states.
pub fn initial_distribution(law: &InitialLaw, n: usize) -> Result<Vec<f64>> {
    let states = 1usize << (n - 1);
    match law {
        InitialLaw::Bernoulli(p) => Ok((0..states)
            .map(|i| {
                let c = Configuration::from_state_index(n, i);
                (1..n)
                    .map(|x| {
                        let r = p.eval(x as f64 / n as f64);
                        if c.get(x) == 1 {
                            r
                        } else {
                            1.0 - r
                        }
                    })
                    .product()
            })
            .collect()),
        _ => {
            let c = law.draw(n, &mut replica_rng(0, 0))?;
            let mut d = vec![0.0; states];
            d[c.state_index()] = 1.0;
            Ok(d)
        }
    }
}

pub fn oracle_comparison(
    params: &ModelParams,
    law: &InitialLaw,
    tilt: Option<&Tilt>,
    m: usize,
    seed: u64,
) -> Result<OracleComparison> {
    let n = params.n();
    let p0 = initial_distribution(law, n)?;
    let exact = transient_distribution(params, tilt, &p0, params.horizon())?;
    let finals = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = law.draw(n, &mut rng)?;
            Ok(run(params, &init, tilt, &mut rng, &mut ())?.state_index())
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut empirical = vec![0.0; exact.len()];
    for s in finals {
        empirical[s] += 1.0 / m as f64;
    }
    let tv = 0.5 * empirical.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(OracleComparison { empirical, exact, tv })
}
