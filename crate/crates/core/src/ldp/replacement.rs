use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{box_range, box_size};
use crate::error::{Error, Result};
use crate::kmc::{run, Event, Observer};
use crate::lattice::Configuration;
use crate::params::{ModelParams, Regime};
use crate::profile::chi_unchecked;
use crate::quad::{mean_var, NeumaierSum};
use crate::rng::replica_rng;

use super::ensemble::InitialLaw;

const RESYNC: usize = 4096;

/// Where the replacement observable lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplacementSite {
    /// (1/n) Σ_{x=1}^{n-2} φ(x/n){(η(x)-η(x+1))²/2 - χ(η^{εn}(x))}.
    Bulk,
    /// φ(1/n)[η(1) - α] for θ < 1, φ(1/n)[η(1) - η^{εn}(1)] for θ > 1.
    Left,
    /// The mirror image at site n-1 with β.
    Right,
}

/// Streams ∫₀ᵀ V_ε(η_s) ds. Box sums and per-site terms are updated
/// locally at each jump.
struct ReplacementIntegral {
    n: usize,
    k: usize,
    site: ReplacementSite,
    /// Reservoir density replacing η at the boundary site, for θ < 1.
    reservoir: Option<f64>,
    phi: Vec<f64>,
    range: Vec<(usize, usize)>,
    box_sum: Vec<i64>,
    term: Vec<f64>,
    value: f64,
    state: Configuration,
    integral: NeumaierSum,
    last_t: f64,
    since_sync: usize,
}

impl ReplacementIntegral {
    fn new(
        params: &ModelParams,
        eps: f64,
        site: ReplacementSite,
        phi: &dyn Fn(f64) -> f64,
        initial: &Configuration,
    ) -> Result<Self> {
        let n = params.n();
        let k = box_size(n, eps)?;
        let reservoir = match (site, params.regime()) {
            (ReplacementSite::Bulk, _) | (_, Regime::Neumann) => None,
            (ReplacementSite::Left, _) => Some(params.alpha()),
            (ReplacementSite::Right, _) => Some(params.beta()),
        };
        let mut range = vec![(0, 0); n];
        for (x, r) in range.iter_mut().enumerate().take(n).skip(1) {
            let b = box_range(n, x, k)?;
            *r = (*b.start(), *b.end());
        }
        let mut obs = ReplacementIntegral {
            n,
            k,
            site,
            reservoir,
            phi: (0..=n).map(|x| phi(x as f64 / n as f64)).collect(),
            range,
            box_sum: vec![0; n],
            term: vec![0.0; n],
            value: 0.0,
            state: initial.clone(),
            integral: NeumaierSum::default(),
            last_t: 0.0,
            since_sync: 0,
        };
        obs.resync();
        Ok(obs)
    }

    fn tracked(&self) -> std::ops::RangeInclusive<usize> {
        match self.site {
            ReplacementSite::Bulk => 1..=self.n - 2,
            ReplacementSite::Left => 1..=1,
            ReplacementSite::Right => self.n - 1..=self.n - 1,
        }
    }

    fn compute_term(&self, x: usize) -> f64 {
        let avg = self.box_sum[x] as f64 / self.k as f64;
        match self.site {
            ReplacementSite::Bulk => {
                let d = f64::from(u8::from(self.state.discordant(x)));
                self.phi[x] * (0.5 * d - chi_unchecked(avg))
            }
            _ => {
                let target = self.reservoir.unwrap_or(avg);
                self.phi[x] * (self.state.get(x) as f64 - target)
            }
        }
    }

    fn resync(&mut self) {
        let mut sum = 0.0;
        for x in self.tracked() {
            let (lo, hi) = self.range[x];
            self.box_sum[x] = (lo..=hi).map(|y| self.state.get(y) as i64).sum();
            self.term[x] = self.compute_term(x);
            sum += self.term[x];
        }
        self.value = sum;
        self.since_sync = 0;
    }

    fn site_changed(&mut self, y: usize, delta: i64) {
        let t = self.tracked();
        let lo = y.saturating_sub(self.k).max(*t.start());
        let hi = (y + self.k).min(*t.end());
        for x in lo..=hi {
            let (a, b) = self.range[x];
            if a <= y && y <= b {
                self.box_sum[x] += delta;
            }
        }
    }

    /// V_ε of the current state.
    fn observable(&self) -> f64 {
        match self.site {
            ReplacementSite::Bulk => self.value / self.n as f64,
            _ => self.value,
        }
    }
}

impl Observer for ReplacementIntegral {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        self.integral.add(self.observable() * (time - self.last_t));
        self.last_t = time;
        let x = event.site as usize;
        let (first, last) = if event.is_exchange() {
            let d = before.get(x + 1) as i64 - before.get(x) as i64;
            self.site_changed(x, d);
            self.site_changed(x + 1, -d);
            (x, x + 1)
        } else {
            let d = 1 - 2 * before.get(x) as i64;
            self.site_changed(x, d);
            (x, x)
        };
        event.apply(&mut self.state);
        let t = self.tracked();
        let lo = first.saturating_sub(self.k + 1).max(*t.start());
        let hi = (last + self.k).min(*t.end());
        for z in lo..=hi {
            let v = self.compute_term(z);
            self.value += v - self.term[z];
            self.term[z] = v;
        }
        self.since_sync += 1;
        if self.since_sync >= RESYNC {
            self.resync();
        }
        Ok(())
    }

    fn on_finish(&mut self, horizon: f64, _: &Configuration) -> Result<()> {
        self.integral.add(self.observable() * (horizon - self.last_t));
        self.last_t = horizon;
        Ok(())
    }
}

/// Monte Carlo summary of ∫₀ᵀ V_ε at one (n, ε).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementRow {
    pub n: usize,
    pub eps: f64,
    pub site: ReplacementSite,
    pub replicas: usize,
    /// Mean of ∫₀ᵀ V_ε.
    pub mean: f64,
    pub stderr: f64,
    /// Mean of |∫₀ᵀ V_ε|.
    pub mean_abs: f64,
    pub stderr_abs: f64,
}

/// ∫₀ᵀ V_ε(η_s) ds over `m` untilted replicas.
pub fn replacement_residual(
    params: &ModelParams,
    initial: &InitialLaw,
    eps: f64,
    site: ReplacementSite,
    phi: &(dyn Fn(f64) -> f64 + Sync),
    m: usize,
    seed: u64,
) -> Result<ReplacementRow> {
    if params.regime() == Regime::Critical {
        return Err(Error::ThetaRegime {
            theta: params.theta(),
            reason: "the replacement observables are not defined at theta = 1",
        });
    }
    if m < 2 {
        return Err(Error::OutOfRange {
            name: "replicas",
            value: m as f64,
            reason: "need at least two replicas for a standard error",
        });
    }
    let n = params.n();
    box_size(n, eps)?;
    let values = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let init = initial.draw(n, &mut rng)?;
            let mut obs = ReplacementIntegral::new(params, eps, site, phi, &init)?;
            run(params, &init, None, &mut rng, &mut obs)?;
            Ok(obs.integral.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let (mean, var) = mean_var(&values);
    let (mean_abs, var_abs) = mean_var(&abs);
    let mf = m as f64;
    Ok(ReplacementRow {
        n,
        eps,
        site,
        replicas: m,
        mean,
        stderr: (var / mf).sqrt(),
        mean_abs,
        stderr_abs: (var_abs / mf).sqrt(),
    })
}

/// `replacement_residual` at each n.
#[allow(clippy::too_many_arguments)]
pub fn replacement_table(
    params: &ModelParams,
    ns: &[usize],
    initial: &InitialLaw,
    eps: f64,
    site: ReplacementSite,
    phi: &(dyn Fn(f64) -> f64 + Sync),
    m: usize,
    seed: u64,
) -> Result<Vec<ReplacementRow>> {
    ns.iter()
        .map(|&n| replacement_residual(&params.with_n(n)?, initial, eps, site, phi, m, seed))
        .collect()
}
