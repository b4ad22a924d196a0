//! Exact continuous-time simulation of the symmetric and the weakly
//! asymmetric exclusion process with slow boundary reservoirs.

mod currents;
mod dynkin;
mod engine;
mod generator;
mod rates;
mod trajectory;

pub use currents::{check_conservation, currents, CurrentCounter, CurrentPath};
pub use dynkin::{dynkin_residual, generator_drift, DynkinObserver, DynkinStats};
pub use engine::{run, simulate, SnapshotRecorder, TILT_WINDOWS};
pub use generator::{exact_generator_small_n, product_measure, transient_distribution, MAX_ORACLE_SITES};
pub use rates::{FrozenRates, Rates, Tilt};
pub use trajectory::{EventLog, Trajectory, TrajectoryHeader};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::Configuration;

/// What happened at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A particle crossed bond (x, x+1) from x to x+1.
    ExchangeRight,
    /// A particle crossed bond (x, x+1) from x+1 to x.
    ExchangeLeft,
    /// A reservoir injected a particle at a boundary site.
    Create,
    /// A reservoir removed a particle from a boundary site.
    Destroy,
}

impl EventKind {
    pub fn code(self) -> u8 {
        match self {
            EventKind::ExchangeRight => 0,
            EventKind::ExchangeLeft => 1,
            EventKind::Create => 2,
            EventKind::Destroy => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => EventKind::ExchangeRight,
            1 => EventKind::ExchangeLeft,
            2 => EventKind::Create,
            3 => EventKind::Destroy,
            _ => return None,
        })
    }
}

/// A jump: for exchanges `site` is the bond's left end x, for flips it is
/// the boundary site (1 or n-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub site: u32,
}

impl Event {
    pub fn is_exchange(&self) -> bool {
        matches!(self.kind, EventKind::ExchangeRight | EventKind::ExchangeLeft)
    }

    /// Applies the jump in place. The caller guarantees it is legal.
    #[inline]
    pub fn apply(&self, config: &mut Configuration) {
        let x = self.site as usize;
        if self.is_exchange() {
            config.swap(x);
        } else {
            config.flip(x);
        }
    }

    /// Whether the jump is allowed from `config`.
    pub fn is_legal(&self, config: &Configuration) -> bool {
        let x = self.site as usize;
        let n = config.n();
        match self.kind {
            EventKind::ExchangeRight => {
                (1..=n - 2).contains(&x) && config.get(x) == 1 && config.get(x + 1) == 0
            }
            EventKind::ExchangeLeft => {
                (1..=n - 2).contains(&x) && config.get(x) == 0 && config.get(x + 1) == 1
            }
            EventKind::Create => (x == 1 || x == n - 1) && config.get(x) == 0,
            EventKind::Destroy => (x == 1 || x == n - 1) && config.get(x) == 1,
        }
    }
}

/// Receives jumps as they are generated.
///
/// `before` is the configuration immediately before the jump, i.e. the state
/// held on the whole interval since the previous jump.
pub trait Observer {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()>;

    /// Called once at the horizon with the final configuration.
    fn on_finish(&mut self, _horizon: f64, _last: &Configuration) -> Result<()> {
        Ok(())
    }
}

impl Observer for () {
    fn on_event(&mut self, _: f64, _: Event, _: &Configuration) -> Result<()> {
        Ok(())
    }
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        (**self).on_event(time, event, before)
    }

    fn on_finish(&mut self, horizon: f64, last: &Configuration) -> Result<()> {
        (**self).on_finish(horizon, last)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        self.0.on_event(time, event, before)?;
        self.1.on_event(time, event, before)
    }

    fn on_finish(&mut self, horizon: f64, last: &Configuration) -> Result<()> {
        self.0.on_finish(horizon, last)?;
        self.1.on_finish(horizon, last)
    }
}

impl<A: Observer, B: Observer, C: Observer> Observer for (A, B, C) {
    fn on_event(&mut self, time: f64, event: Event, before: &Configuration) -> Result<()> {
        self.0.on_event(time, event, before)?;
        self.1.on_event(time, event, before)?;
        self.2.on_event(time, event, before)
    }

    fn on_finish(&mut self, horizon: f64, last: &Configuration) -> Result<()> {
        self.0.on_finish(horizon, last)?;
        self.1.on_finish(horizon, last)?;
        self.2.on_finish(horizon, last)
    }
}
