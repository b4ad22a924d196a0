use rand::Rng;

use super::rates::{check_tilt, FrozenRates, Rates, Tilt};
use super::trajectory::{EventLog, Trajectory};
use super::{Event, EventKind, Observer};
use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::params::ModelParams;
use crate::rng::{rng_from_seed, SimRng};

/// Number of envelope windows on [0, T] for time-dependent tilts.
pub const TILT_WINDOWS: usize = 16;

/// Relative slack when comparing a proposed rate to its envelope.
const ENVELOPE_SLACK: f64 = 1e-12;

/// Discordant bonds, with O(1) membership updates and uniform selection.
struct Discordant {
    list: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl Discordant {
    fn new(config: &Configuration) -> Self {
        let n = config.n();
        let mut d = Discordant {
            list: Vec::with_capacity(n),
            pos: vec![ABSENT; n],
        };
        for x in 1..=n - 2 {
            if config.discordant(x) {
                d.insert(x);
            }
        }
        d
    }

    #[inline]
    fn len(&self) -> usize {
        self.list.len()
    }

    #[inline]
    fn insert(&mut self, x: usize) {
        if self.pos[x] == ABSENT {
            self.pos[x] = self.list.len() as u32;
            self.list.push(x as u32);
        }
    }

    #[inline]
    fn remove(&mut self, x: usize) {
        let p = self.pos[x];
        if p != ABSENT {
            let last = self.list.pop().expect("non-empty");
            if last as usize != x {
                self.list[p as usize] = last;
                self.pos[last as usize] = p;
            }
            self.pos[x] = ABSENT;
        }
    }

    #[inline]
    fn refresh(&mut self, config: &Configuration, x: usize) {
        if x >= 1 && x <= config.n() - 2 {
            if config.discordant(x) {
                self.insert(x);
            } else {
                self.remove(x);
            }
        }
    }
}

enum RateSource<'a> {
    Frozen(FrozenRates),
    Live(Rates<'a>),
}

impl RateSource<'_> {
    #[inline]
    fn bond(&self, t: f64, x: usize, s: f64) -> f64 {
        match self {
            RateSource::Frozen(f) => f.bond(x, s),
            RateSource::Live(r) => r.bond(t, x, s),
        }
    }

    #[inline]
    fn flip(&self, t: f64, site: usize, occ: u8) -> f64 {
        match self {
            RateSource::Frozen(f) => f.flip(site, occ),
            RateSource::Live(r) => r.flip(t, site, occ),
        }
    }
}

/// Runs one realisation on [0, T], streaming every jump to `observer`.
/// Returns the configuration at T.
///
/// Untilted dynamics is simulated with exact rates. Tilted dynamics uses
/// thinning against envelopes n²·exp(2 sup|∂_uH|/n) per discordant bond and
/// n^{2-θ}·exp(sup|G|) per boundary site, recomputed on each window.
pub fn run<O: Observer>(
    params: &ModelParams,
    initial: &Configuration,
    tilt: Option<&Tilt>,
    rng: &mut SimRng,
    observer: &mut O,
) -> Result<Configuration> {
    if initial.n() != params.n() {
        return Err(Error::Invalid(format!(
            "configuration has n = {}, parameters have n = {}",
            initial.n(),
            params.n()
        )));
    }
    check_tilt(params, tilt)?;
    let n = params.n();
    let last = n - 1;
    let horizon = params.horizon();
    let rates = Rates::new(params, tilt);
    let mut config = initial.clone();
    let mut disc = Discordant::new(&config);

    let windows = match tilt {
        Some(t) if !t.is_time_independent() => TILT_WINDOWS,
        _ => 1,
    };
    let source = if rates.is_time_independent() {
        RateSource::Frozen(rates.frozen(0.0))
    } else {
        RateSource::Live(rates)
    };

    let nf = n as f64;
    let bulk = params.bulk_rate();
    let bprefactor = params.boundary_rate();
    let mut t: f64 = 0.0;
    for w in 0..windows {
        let w0 = horizon * w as f64 / windows as f64;
        let w1 = horizon * (w + 1) as f64 / windows as f64;
        // Envelopes: None means exact rates (no thinning).
        let (bond_env, flip_env) = match tilt {
            None => (bulk, None),
            Some(tl) => {
                let lip = tl.slope_bound(w0, w1);
                let bond_env = bulk * (2.0 * lip / nf).exp();
                let left = bprefactor * tl.g_bound(1, n, w0, w1).exp();
                let right = bprefactor * tl.g_bound(last, n, w0, w1).exp();
                (bond_env, Some([left, right]))
            }
        };
        t = t.max(w0);
        loop {
            let eb = bond_env * disc.len() as f64;
            let (el, er) = match flip_env {
                Some([l, r]) => (l, r),
                None => (
                    source.flip(t, 1, config.get(1)),
                    source.flip(t, last, config.get(last)),
                ),
            };
            let total = eb + el + er;
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / total;
            if t >= w1 {
                t = w1;
                break;
            }
            let pick = rng.random::<f64>() * total;
            let event = if pick < eb {
                let x = disc.list[rng.random_range(0..disc.len())] as usize;
                let s = config.get(x) as f64 - config.get(x + 1) as f64;
                if tilt.is_some() {
                    let rate = source.bond(t, x, s);
                    if rate > bond_env * (1.0 + ENVELOPE_SLACK) {
                        return Err(Error::RateBoundViolation {
                            rate,
                            envelope: bond_env,
                            time: t,
                        });
                    }
                    if rng.random::<f64>() * bond_env >= rate {
                        continue;
                    }
                }
                let kind = if s > 0.0 {
                    EventKind::ExchangeRight
                } else {
                    EventKind::ExchangeLeft
                };
                Event { kind, site: x as u32 }
            } else {
                let (site, env) = if pick < eb + el { (1, el) } else { (last, er) };
                let occ = config.get(site);
                if flip_env.is_some() {
                    let rate = source.flip(t, site, occ);
                    if rate > env * (1.0 + ENVELOPE_SLACK) {
                        return Err(Error::RateBoundViolation {
                            rate,
                            envelope: env,
                            time: t,
                        });
                    }
                    if rng.random::<f64>() * env >= rate {
                        continue;
                    }
                }
                let kind = if occ == 0 {
                    EventKind::Create
                } else {
                    EventKind::Destroy
                };
                Event { kind, site: site as u32 }
            };
            observer.on_event(t, event, &config)?;
            event.apply(&mut config);
            let x = event.site as usize;
            if event.is_exchange() {
                disc.refresh(&config, x - 1);
                disc.refresh(&config, x + 1);
            } else if x == 1 {
                disc.refresh(&config, 1);
            } else {
                disc.refresh(&config, last - 1);
            }
        }
    }
    observer.on_finish(horizon, &config)?;
    Ok(config)
}

/// Records the configuration at each scheduled time (right-continuous).
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    schedule: Vec<f64>,
    snapshots: Vec<Configuration>,
}

impl SnapshotRecorder {
    /// `schedule` must be nondecreasing.
    pub fn new(schedule: Vec<f64>) -> Result<Self> {
        if schedule.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid("observation schedule must be nondecreasing".into()));
        }
        Ok(SnapshotRecorder {
            snapshots: Vec::with_capacity(schedule.len()),
            schedule,
        })
    }

    pub fn into_snapshots(self) -> Vec<Configuration> {
        self.snapshots
    }

    pub fn snapshots(&self) -> &[Configuration] {
        &self.snapshots
    }

    pub fn schedule(&self) -> &[f64] {
        &self.schedule
    }
}

impl Observer for SnapshotRecorder {
    fn on_event(&mut self, time: f64, _: Event, before: &Configuration) -> Result<()> {
        while self.snapshots.len() < self.schedule.len() && self.schedule[self.snapshots.len()] < time {
            self.snapshots.push(before.clone());
        }
        Ok(())
    }

    fn on_finish(&mut self, _: f64, last: &Configuration) -> Result<()> {
        while self.snapshots.len() < self.schedule.len() {
            self.snapshots.push(last.clone());
        }
        Ok(())
    }
}

/// Simulates one trajectory and keeps its full event log and snapshots.
pub fn simulate(
    params: &ModelParams,
    initial: &Configuration,
    tilt: Option<&Tilt>,
    schedule: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = rng_from_seed(seed);
    simulate_with(params, initial, tilt, schedule, seed, &mut rng)
}

pub(crate) fn simulate_with(
    params: &ModelParams,
    initial: &Configuration,
    tilt: Option<&Tilt>,
    schedule: &[f64],
    seed: u64,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    if let Some(&s) = schedule.iter().find(|&&s| !(0.0..=params.horizon()).contains(&s)) {
        return Err(Error::Invalid(format!(
            "observation time {s} outside [0, {}]",
            params.horizon()
        )));
    }
    let mut rec = (EventLog::default(), SnapshotRecorder::new(schedule.to_vec())?);
    let final_state = run(params, initial, tilt, rng, &mut rec)?;
    let (log, snaps) = rec;
    Ok(Trajectory::from_parts(
        *params,
        initial.clone(),
        seed,
        schedule.to_vec(),
        log.events,
        snaps.into_snapshots(),
        final_state,
    ))
}
