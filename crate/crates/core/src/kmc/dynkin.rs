use rayon::prelude::*;

use super::engine::run;
use super::rates::{FrozenRates, Rates, Tilt};
use super::{Event, Observer};
use crate::error::Result;
use crate::lattice::Configuration;
use crate::params::ModelParams;
use crate::quad::{gauss4, mean_var, NeumaierSum};
use crate::rng::replica_rng;

/// n²L_t⟨π,f⟩(η) for f given by its values `f[x] = f(x/n)`, x = 0..=n.
pub fn generator_drift(rates: &Rates<'_>, t: f64, config: &Configuration, f: &[f64]) -> f64 {
    let n = config.n();
    let nf = n as f64;
    let mut sum = 0.0;
    for x in 1..=n - 2 {
        if config.discordant(x) {
            let s = config.get(x) as f64 - config.get(x + 1) as f64;
            sum += rates.bond(t, x, s) * s * (f[x + 1] - f[x]);
        }
    }
    for y in [1, n - 1] {
        let occ = config.get(y);
        sum += rates.flip(t, y, occ) * (1.0 - 2.0 * occ as f64) * f[y];
    }
    sum / nf
}

fn pairing_values(config: &Configuration, f: &[f64]) -> f64 {
    let n = config.n();
    (1..n).map(|x| config.get(x) as f64 * f[x]).sum::<f64>() / n as f64
}

/// Accumulates M_T(f) = ⟨π_T,f⟩ - ⟨π_0,f⟩ - ∫_0^T n²L_s⟨π_s,f⟩ ds along a
/// path, for a time-independent test function f.
pub struct DynkinObserver<'a> {
    rates: Rates<'a>,
    frozen: Option<FrozenRates>,
    f: Vec<f64>,
    state: Configuration,
    contrib: Vec<f64>,
    bulk: f64,
    integral: NeumaierSum,
    last_t: f64,
    since_sync: usize,
    start: f64,
    residual: Option<f64>,
}

/// Events between full recomputations of the maintained bulk drift.
const RESYNC: usize = 4096;

impl<'a> DynkinObserver<'a> {
    pub fn new(
        params: &'a ModelParams,
        tilt: Option<&'a Tilt>,
        initial: &Configuration,
        f: impl Fn(f64) -> f64,
    ) -> Self {
        let n = params.n();
        let rates = Rates::new(params, tilt);
        let fv: Vec<f64> = (0..=n).map(|x| f(x as f64 / n as f64)).collect();
        let frozen = rates.is_time_independent().then(|| rates.frozen(0.0));
        let mut obs = DynkinObserver {
            rates,
            frozen,
            start: pairing_values(initial, &fv),
            f: fv,
            state: initial.clone(),
            contrib: vec![0.0; n],
            bulk: 0.0,
            integral: NeumaierSum::default(),
            last_t: 0.0,
            since_sync: 0,
            residual: None,
        };
        obs.resync();
        obs
    }

    fn bond_contrib(&self, x: usize) -> f64 {
        let fr = self.frozen.as_ref().expect("frozen rates");
        if self.state.discordant(x) {
            let s = self.state.get(x) as f64 - self.state.get(x + 1) as f64;
            fr.bond(x, s) * s * (self.f[x + 1] - self.f[x])
        } else {
            0.0
        }
    }

    fn resync(&mut self) {
        if self.frozen.is_none() {
            return;
        }
        let n = self.state.n();
        self.bulk = 0.0;
        for x in 1..=n - 2 {
            self.contrib[x] = self.bond_contrib(x);
            self.bulk += self.contrib[x];
        }
        self.since_sync = 0;
    }

    fn refresh(&mut self, x: usize) {
        if x >= 1 && x <= self.state.n() - 2 {
            let c = self.bond_contrib(x);
            self.bulk += c - self.contrib[x];
            self.contrib[x] = c;
        }
    }

    fn frozen_drift(&self) -> f64 {
        let fr = self.frozen.as_ref().expect("frozen rates");
        let n = self.state.n();
        let mut b = 0.0;
        for y in [1, n - 1] {
            let occ = self.state.get(y);
            b += fr.flip(y, occ) * (1.0 - 2.0 * occ as f64) * self.f[y];
        }
        (self.bulk + b) / n as f64
    }

    fn integrate_to(&mut self, t: f64, state: &Configuration) {
        if t <= self.last_t {
            return;
        }
        let piece = if self.frozen.is_some() {
            self.frozen_drift() * (t - self.last_t)
        } else {
            gauss4(self.last_t, t)
                .iter()
                .map(|&(s, w)| w * generator_drift(&self.rates, s, state, &self.f))
                .sum()
        };
        self.integral.add(piece);
        self.last_t = t;
    }

    /// The martingale value at the horizon, once the path is finished.
    pub fn residual(&self) -> Option<f64> {
        self.residual
    }
}

impl Observer for DynkinObserver<'_> {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        self.integrate_to(time, before);
        event.apply(&mut self.state);
        if self.frozen.is_some() {
            let x = event.site as usize;
            if event.is_exchange() {
                self.refresh(x - 1);
                self.refresh(x);
                self.refresh(x + 1);
            } else if x == 1 {
                self.refresh(1);
            } else {
                self.refresh(x - 1);
            }
            self.since_sync += 1;
            if self.since_sync >= RESYNC {
                self.resync();
            }
        }
        Ok(())
    }

    fn on_finish(&mut self, horizon: f64, last: &Configuration) -> Result<()> {
        self.integrate_to(horizon, last);
        self.residual = Some(pairing_values(last, &self.f) - self.start - self.integral.value());
        Ok(())
    }
}

/// Sample of M_T(f) over independent replicas.
#[derive(Debug, Clone)]
pub struct DynkinStats {
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

/// Runs `m` replicas from `initial` and returns the Dynkin martingale at T.
pub fn dynkin_residual(
    params: &ModelParams,
    initial: &Configuration,
    f: &(dyn Fn(f64) -> f64 + Sync),
    tilt: Option<&Tilt>,
    m: usize,
    seed: u64,
) -> Result<DynkinStats> {
    let values = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i as u64);
            let mut obs = DynkinObserver::new(params, tilt, initial, f);
            run(params, initial, tilt, &mut rng, &mut obs)?;
            Ok(obs.residual().expect("finished"))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, variance) = mean_var(&values);
    let stderr = (variance / m as f64).sqrt();
    Ok(DynkinStats {
        values,
        mean,
        variance,
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;

    #[test]
    fn constant_test_function_sees_only_the_boundary() {
        let p = validate_params(10, 2.0, 0.3, 0.6, 1.0).unwrap();
        let rates = Rates::new(&p, None);
        let c: Configuration = "011010011".parse().unwrap();
        let f = vec![1.0; 11];
        let d = generator_drift(&rates, 0.0, &c, &f);
        // site 1 empty: creation at 10^0·0.3; site 9 full: destruction at 0.4.
        let expect = (0.3 - 0.4) / 10.0;
        assert!((d - expect).abs() < 1e-14);
    }

    #[test]
    fn incremental_drift_matches_direct_sum() {
        let p = validate_params(16, 0.5, 0.3, 0.6, 0.05).unwrap();
        let init = Configuration::empty(16);
        let f = |u: f64| (3.0 * u).sin();
        let traj = crate::kmc::simulate(&p, &init, None, &[], 2).unwrap();
        let mut obs = DynkinObserver::new(&p, None, &init, f);
        let mut direct = DynkinDirect::new(&p, &init, f);
        traj.replay_into(&mut (&mut obs, &mut direct)).unwrap();
        assert!((obs.residual().unwrap() - direct.residual).abs() < 1e-9);
    }

    struct DynkinDirect<'a> {
        rates: Rates<'a>,
        f: Vec<f64>,
        integral: f64,
        last: f64,
        start: f64,
        residual: f64,
    }

    impl<'a> DynkinDirect<'a> {
        fn new(p: &'a ModelParams, init: &Configuration, f: impl Fn(f64) -> f64) -> Self {
            let n = p.n();
            let fv: Vec<f64> = (0..=n).map(|x| f(x as f64 / n as f64)).collect();
            DynkinDirect {
                rates: Rates::new(p, None),
                start: pairing_values(init, &fv),
                f: fv,
                integral: 0.0,
                last: 0.0,
                residual: 0.0,
            }
        }
    }

    impl Observer for DynkinDirect<'_> {
        fn on_event(&mut self, t: f64, _: Event, before: &Configuration) -> Result<()> {
            self.integral += generator_drift(&self.rates, t, before, &self.f) * (t - self.last);
            self.last = t;
            Ok(())
        }

        fn on_finish(&mut self, h: f64, last: &Configuration) -> Result<()> {
            self.integral += generator_drift(&self.rates, h, last, &self.f) * (h - self.last);
            self.residual = pairing_values(last, &self.f) - self.start - self.integral;
            Ok(())
        }
    }
}
