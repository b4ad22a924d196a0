use crate::error::{Error, Result};
use crate::kmc::{Event, EventKind, FrozenRates, Observer, Rates, Tilt, Trajectory};
use crate::lattice::Configuration;
use crate::params::ModelParams;
use crate::quad::{gauss4, NeumaierSum};

/// Longest holding interval integrated by a single 4-point Gauss rule, as a
/// fraction of the horizon, for time-dependent tilts.
const GAUSS_PANELS: f64 = 64.0;

/// Events between full recomputations of the maintained bulk sum.
const RESYNC: usize = 4096;

fn holding_panels(t0: f64, t1: f64, horizon: f64) -> impl Iterator<Item = (f64, f64)> {
    let max_len = (horizon / GAUSS_PANELS).max(f64::MIN_POSITIVE);
    let pieces = ((t1 - t0) / max_len).ceil().max(1.0) as usize;
    let h = (t1 - t0) / pieces as f64;
    (0..pieces).flat_map(move |p| gauss4(t0 + p as f64 * h, t0 + (p + 1) as f64 * h))
}

/// Streams log(dP/dP^{H,G}) along a path simulated under the tilted law:
/// the sum over jumps of log(c/c̄) minus ∫(λ - λ̄), with c, λ the untilted
/// and c̄, λ̄ the tilted rates.
pub struct RnWeight<'a> {
    plain: Rates<'a>,
    tilted: Rates<'a>,
    frozen: Option<FrozenRates>,
    horizon: f64,
    state: Configuration,
    /// λ - λ̄ restricted to bond x, kept for time-independent tilts.
    contrib: Vec<f64>,
    bulk: f64,
    since_sync: usize,
    jumps: NeumaierSum,
    holding: NeumaierSum,
    last_t: f64,
    events: usize,
    value: Option<f64>,
}

impl<'a> RnWeight<'a> {
    pub fn new(params: &'a ModelParams, tilt: &'a Tilt, initial: &Configuration) -> Self {
        let tilted = Rates::new(params, Some(tilt));
        let frozen = tilted.is_time_independent().then(|| tilted.frozen(0.0));
        let mut w = RnWeight {
            plain: Rates::new(params, None),
            tilted,
            frozen,
            horizon: params.horizon(),
            state: initial.clone(),
            contrib: vec![0.0; params.n()],
            bulk: 0.0,
            since_sync: 0,
            jumps: NeumaierSum::default(),
            holding: NeumaierSum::default(),
            last_t: 0.0,
            events: 0,
            value: None,
        };
        w.resync();
        w
    }

    fn bond_contrib(&self, x: usize) -> f64 {
        let fr = self.frozen.as_ref().expect("frozen rates");
        if self.state.discordant(x) {
            let s = self.state.get(x) as f64 - self.state.get(x + 1) as f64;
            self.plain.params().bulk_rate() - fr.bond(x, s)
        } else {
            0.0
        }
    }

    fn resync(&mut self) {
        if self.frozen.is_none() {
            return;
        }
        self.bulk = 0.0;
        for x in 1..=self.state.n() - 2 {
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

    fn boundary_gap(&self, t: f64, config: &Configuration) -> f64 {
        let n = config.n();
        [1, n - 1]
            .into_iter()
            .map(|y| {
                let occ = config.get(y);
                self.plain.flip(t, y, occ) - self.tilted.flip(t, y, occ)
            })
            .sum()
    }

    fn integrate_to(&mut self, t: f64, config: &Configuration) {
        if t <= self.last_t {
            return;
        }
        let piece = if self.frozen.is_some() {
            (self.bulk + self.boundary_gap(0.0, config)) * (t - self.last_t)
        } else {
            holding_panels(self.last_t, t, self.horizon)
                .map(|(s, w)| w * (self.plain.total(s, config) - self.tilted.total(s, config)))
                .sum()
        };
        self.holding.add(piece);
        self.last_t = t;
    }

    /// log(dP/dP^{H,G}) on [0,T], once the path is finished.
    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

impl Observer for RnWeight<'_> {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        self.integrate_to(time, before);
        let index = self.events;
        self.events += 1;
        if !event.is_legal(before) {
            return Err(Error::RateMismatch { index });
        }
        let x = event.site as usize;
        let (c, cbar) = if event.is_exchange() {
            let s = before.get(x) as f64 - before.get(x + 1) as f64;
            (self.plain.bond(time, x, s), self.tilted.bond(time, x, s))
        } else {
            let occ = before.get(x);
            (self.plain.flip(time, x, occ), self.tilted.flip(time, x, occ))
        };
        if !(c > 0.0 && cbar > 0.0) {
            return Err(Error::RateMismatch { index });
        }
        self.jumps.add((c / cbar).ln());
        event.apply(&mut self.state);
        if self.frozen.is_some() {
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
        self.value = Some(self.jumps.value() - self.holding.value());
        Ok(())
    }
}

/// log(dP/dP^{H,G}) of a recorded trajectory.
pub fn rn_log_weight(traj: &Trajectory, tilt: &Tilt) -> Result<f64> {
    let mut w = RnWeight::new(traj.params(), tilt, traj.initial());
    traj.replay_into(&mut w)?;
    Ok(w.value().expect("finished"))
}

/// e^z - 1 - z - z²/2 without cancellation for small z.
fn cubic_remainder(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z3 = z * z * z;
        z3 * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0)))
    } else {
        z.exp_m1() - z - 0.5 * z * z
    }
}

/// The same weight written through the empirical measure, with G = H at
/// the boundary sites:
///
/// -n[A - ∫⟨π',Δ_nH⟩ - ∫⟨χ^n,(∇⁺_nH)²⟩ + ∫(η(n-1)∇⁻_nH((n-1)/n) - η(1)∇⁺_nH(1/n))
///    - ∫nΣ_x r(s_xδ_x) - n^{1-θ}∫Σ_{x=1,n-1}(r_x(e^{H}-1)(1-η(x)) + (1-r_x)(e^{-H}-1)η(x))]
///
/// with A = ⟨π_T,H_T⟩ - ⟨π_0,H_0⟩ - ∫⟨π,∂_sH⟩, π' the empirical measure
/// restricted to sites 2..n-2, χ^n the measure of mass (η(x)-η(x+1))²/(2n)
/// at x/n, and r(z) = e^z - 1 - z - z²/2 summed over bonds 1..n-2.
pub struct ExpandedWeight<'a> {
    params: &'a ModelParams,
    tilt: &'a Tilt,
    state: Configuration,
    start: f64,
    integral: NeumaierSum,
    last_t: f64,
    value: Option<f64>,
}

impl<'a> ExpandedWeight<'a> {
    pub fn new(params: &'a ModelParams, tilt: &'a Tilt, initial: &Configuration) -> Result<Self> {
        if !tilt.g_equals_h() {
            return Err(Error::Invalid("the expanded weight needs G = H at the boundary".into()));
        }
        Ok(ExpandedWeight {
            params,
            tilt,
            start: Self::pairing(tilt, initial, 0.0),
            state: initial.clone(),
            integral: NeumaierSum::default(),
            last_t: 0.0,
            value: None,
        })
    }

    fn pairing(tilt: &Tilt, c: &Configuration, t: f64) -> f64 {
        let n = c.n();
        let h = tilt.h();
        (1..n)
            .filter(|&x| c.get(x) == 1)
            .map(|x| h.value(t, x as f64 / n as f64))
            .sum::<f64>()
            / n as f64
    }

    /// Integrand of everything except ⟨π_T,H_T⟩ - ⟨π_0,H_0⟩, so that the
    /// bracket equals that difference minus the time integral of this.
    fn integrand(&self, t: f64, c: &Configuration) -> f64 {
        let n = c.n();
        let nf = n as f64;
        let h = self.tilt.h();
        let hv: Vec<f64> = (0..=n).map(|x| h.value(t, x as f64 / nf)).collect();
        let eta = |x: usize| c.get(x) as f64;
        let mut s = 0.0;
        // ⟨π,∂_sH⟩
        for x in 1..n {
            s += eta(x) * h.dt(t, x as f64 / nf) / nf;
        }
        // ⟨π',Δ_nH⟩
        for x in 2..=n - 2 {
            s += eta(x) * nf * (hv[x + 1] - 2.0 * hv[x] + hv[x - 1]);
        }
        // ⟨χ^n,(∇⁺H)²⟩ and nΣ r(sδ)
        for x in 1..=n - 2 {
            let d = eta(x) - eta(x + 1);
            if d != 0.0 {
                let delta = hv[x + 1] - hv[x];
                s += 0.5 * nf * delta * delta;
                s += nf * cubic_remainder(d * delta);
            }
        }
        // -(η(n-1)∇⁻H - η(1)∇⁺H)
        s -= eta(n - 1) * nf * (hv[n - 1] - hv[n - 2]) - eta(1) * nf * (hv[2] - hv[1]);
        // n^{1-θ} boundary exponentials
        let scale = nf.powf(1.0 - self.params.theta());
        for y in [1, n - 1] {
            let r = self.params.reservoir(y);
            let g = hv[y];
            s += scale * (r * g.exp_m1() * (1.0 - eta(y)) + (1.0 - r) * (-g).exp_m1() * eta(y));
        }
        s
    }

    fn integrate_to(&mut self, t: f64, c: &Configuration) {
        if t <= self.last_t {
            return;
        }
        let piece: f64 = if self.tilt.is_time_independent() {
            self.integrand(self.last_t, c) * (t - self.last_t)
        } else {
            holding_panels(self.last_t, t, self.params.horizon())
                .map(|(s, w)| w * self.integrand(s, c))
                .sum()
        };
        self.integral.add(piece);
        self.last_t = t;
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

impl Observer for ExpandedWeight<'_> {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        self.integrate_to(time, before);
        event.apply(&mut self.state);
        Ok(())
    }

    fn on_finish(&mut self, horizon: f64, last: &Configuration) -> Result<()> {
        self.integrate_to(horizon, last);
        let end = Self::pairing(self.tilt, last, horizon);
        let n = self.params.n() as f64;
        self.value = Some(-n * (end - self.start - self.integral.value()));
        Ok(())
    }
}

/// The expanded empirical-measure form of `rn_log_weight` (G = H only).
pub fn rn_log_weight_expanded(traj: &Trajectory, tilt: &Tilt) -> Result<f64> {
    let mut w = ExpandedWeight::new(traj.params(), tilt, traj.initial())?;
    traj.replay_into(&mut w)?;
    Ok(w.value().expect("finished"))
}

/// Contribution of a single jump to log(dP/dP^{H,G}) at time t.
pub fn jump_log_ratio(tilt: &Tilt, params: &ModelParams, t: f64, event: Event, before: &Configuration) -> f64 {
    let n = params.n();
    let x = event.site as usize;
    match event.kind {
        EventKind::ExchangeRight | EventKind::ExchangeLeft => {
            let s = before.get(x) as f64 - before.get(x + 1) as f64;
            -s * tilt.bond_increment(t, x, n)
        }
        EventKind::Create => -tilt.g(t, x, n),
        EventKind::Destroy => tilt.g(t, x, n),
    }
}
