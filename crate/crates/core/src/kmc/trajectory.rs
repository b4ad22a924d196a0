use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Event, EventKind, Observer};
use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::params::ModelParams;

/// Appends every jump to a vector.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub events: Vec<(f64, Event)>,
}

impl Observer for EventLog {
    fn on_event(&mut self, time: f64, event: Event, _: &Configuration) -> Result<()> {
        self.events.push((time, event));
        Ok(())
    }
}

/// A simulated path: initial state, time-ordered jumps and the
/// configurations seen at the observation schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    params: ModelParams,
    initial: Configuration,
    seed: u64,
    schedule: Vec<f64>,
    events: Vec<(f64, Event)>,
    snapshots: Vec<Configuration>,
    final_state: Configuration,
}

/// JSON header accompanying a binary event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub params: ModelParams,
    pub seed: u64,
    pub schedule: Vec<f64>,
    pub initial: String,
    pub n_events: usize,
}

/// Bytes per binary log record: f64 time, u8 kind, u32 site.
const RECORD: usize = 13;

impl Trajectory {
    pub(crate) fn from_parts(
        params: ModelParams,
        initial: Configuration,
        seed: u64,
        schedule: Vec<f64>,
        events: Vec<(f64, Event)>,
        snapshots: Vec<Configuration>,
        final_state: Configuration,
    ) -> Self {
        Trajectory {
            params,
            initial,
            seed,
            schedule,
            events,
            snapshots,
            final_state,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn initial(&self) -> &Configuration {
        &self.initial
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn schedule(&self) -> &[f64] {
        &self.schedule
    }

    pub fn events(&self) -> &[(f64, Event)] {
        &self.events
    }

    pub fn snapshots(&self) -> &[Configuration] {
        &self.snapshots
    }

    pub fn final_state(&self) -> &Configuration {
        &self.final_state
    }

    /// Configuration at time t (all jumps at times ≤ t applied).
    pub fn state_at(&self, t: f64) -> Configuration {
        let mut c = self.initial.clone();
        for (s, e) in &self.events {
            if *s > t {
                break;
            }
            e.apply(&mut c);
        }
        c
    }

    /// Feeds the log to an observer exactly as the simulator did.
    pub fn replay_into<O: Observer>(&self, observer: &mut O) -> Result<Configuration> {
        let mut c = self.initial.clone();
        for &(t, e) in &self.events {
            observer.on_event(t, e, &c)?;
            e.apply(&mut c);
        }
        observer.on_finish(self.params.horizon(), &c)?;
        Ok(c)
    }

    /// Structural checks: increasing times in [0,T], legal jumps, snapshots
    /// and final state reproduced by replay.
    pub fn validate(&self) -> Result<()> {
        let mut c = self.initial.clone();
        let mut prev = 0.0;
        let mut snap = 0;
        for (i, &(t, e)) in self.events.iter().enumerate() {
            if !(t > prev || (i == 0 && t >= 0.0)) || t > self.params.horizon() {
                return Err(Error::Invalid(format!("event {i} at t = {t} breaks time order")));
            }
            while snap < self.schedule.len() && self.schedule[snap] < t {
                if self.snapshots[snap] != c {
                    return Err(Error::Invalid(format!("snapshot {snap} not reproduced by replay")));
                }
                snap += 1;
            }
            if !e.is_legal(&c) {
                return Err(Error::Invalid(format!("event {i} ({e:?}) is illegal in its pre-state")));
            }
            e.apply(&mut c);
            prev = t;
        }
        for k in snap..self.schedule.len() {
            if self.snapshots[k] != c {
                return Err(Error::Invalid(format!("snapshot {k} not reproduced by replay")));
            }
        }
        if c != self.final_state {
            return Err(Error::Invalid("final state not reproduced by replay".into()));
        }
        Ok(())
    }

    pub fn header(&self) -> TrajectoryHeader {
        TrajectoryHeader {
            params: self.params,
            seed: self.seed,
            schedule: self.schedule.clone(),
            initial: self.initial.to_string(),
            n_events: self.events.len(),
        }
    }

    /// Little-endian records (f64 time, u8 kind, u32 site).
    pub fn write_event_log(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(self.events.len() * RECORD);
        for (t, e) in &self.events {
            buf.extend_from_slice(&t.to_le_bytes());
            buf.push(e.kind.code());
            buf.extend_from_slice(&e.site.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Rebuilds a trajectory from its header and binary log; snapshots are
    /// regenerated by replay.
    pub fn read(header: &TrajectoryHeader, mut log: impl Read) -> Result<Self> {
        let initial: Configuration = header.initial.parse()?;
        let mut bytes = Vec::new();
        log.read_to_end(&mut bytes)?;
        if bytes.len() != header.n_events * RECORD {
            return Err(Error::Invalid(format!(
                "event log has {} bytes, header announces {} events",
                bytes.len(),
                header.n_events
            )));
        }
        let events = bytes
            .chunks_exact(RECORD)
            .map(|r| {
                let t = f64::from_le_bytes(r[0..8].try_into().expect("8 bytes"));
                let kind = EventKind::from_code(r[8])
                    .ok_or_else(|| Error::Invalid(format!("unknown event code {}", r[8])))?;
                let site = u32::from_le_bytes(r[9..13].try_into().expect("4 bytes"));
                Ok((t, Event { kind, site }))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut traj = Trajectory {
            params: header.params,
            initial: initial.clone(),
            seed: header.seed,
            schedule: header.schedule.clone(),
            events,
            snapshots: Vec::new(),
            final_state: initial,
        };
        let mut rec = super::SnapshotRecorder::new(traj.schedule.clone())?;
        let mut c = traj.initial.clone();
        for &(t, e) in &traj.events {
            if !e.is_legal(&c) {
                return Err(Error::Invalid(format!("illegal event {e:?} at t = {t}")));
            }
            rec.on_event(t, e, &c)?;
            e.apply(&mut c);
        }
        rec.on_finish(traj.params.horizon(), &c)?;
        traj.snapshots = rec.into_snapshots();
        traj.final_state = c;
        Ok(traj)
    }

    /// Snapshots as CSV rows `t,x,eta`.
    pub fn snapshots_csv(&self) -> String {
        let mut s = String::from("t,x,eta\n");
        for (t, c) in self.schedule.iter().zip(&self.snapshots) {
            for x in 1..c.n() {
                s.push_str(&format!("{t},{x},{}\n", c.get(x)));
            }
        }
        s
    }
}
