use super::trajectory::Trajectory;
use super::{Event, EventKind, Observer};
use crate::error::{Error, Result};
use crate::lattice::Configuration;

/// Index of the current affected by an event and the signed increment.
///
/// Index 0 is J_{0,1} (created minus destroyed at site 1), index x in
/// 1..=n-2 is J_{x,x+1} (right minus left jumps), index n-1 is J_{n-1,n}
/// (destroyed minus created at site n-1).
#[inline]
fn increment(e: Event, n: usize) -> (usize, i64) {
    let x = e.site as usize;
    match e.kind {
        EventKind::ExchangeRight => (x, 1),
        EventKind::ExchangeLeft => (x, -1),
        EventKind::Create if x == 1 => (0, 1),
        EventKind::Destroy if x == 1 => (0, -1),
        EventKind::Create => (n - 1, -1),
        EventKind::Destroy => (n - 1, 1),
    }
}

/// Streaming cumulative currents.
#[derive(Debug, Clone)]
pub struct CurrentCounter {
    n: usize,
    counts: Vec<i64>,
}

impl CurrentCounter {
    pub fn new(n: usize) -> Self {
        CurrentCounter { n, counts: vec![0; n] }
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    /// J_{0,1}.
    pub fn left(&self) -> i64 {
        self.counts[0]
    }

    /// J_{n-1,n}.
    pub fn right(&self) -> i64 {
        self.counts[self.n - 1]
    }
}

impl Observer for CurrentCounter {
    fn on_event(&mut self, _: f64, e: Event, _: &Configuration) -> Result<()> {
        let (i, d) = increment(e, self.n);
        self.counts[i] += d;
        Ok(())
    }
}

/// Cumulative currents as step functions of time.
#[derive(Debug, Clone)]
pub struct CurrentPath {
    n: usize,
    times: Vec<f64>,
    steps: Vec<(u32, i8)>,
}

impl CurrentPath {
    /// Currents at time t (jumps at times ≤ t counted), indexed as in
    /// [`CurrentCounter`].
    pub fn at(&self, t: f64) -> Vec<i64> {
        let mut j = vec![0i64; self.n];
        for (s, &(i, d)) in self.times.iter().zip(&self.steps) {
            if *s > t {
                break;
            }
            j[i as usize] += d as i64;
        }
        j
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }
}

pub fn currents(traj: &Trajectory) -> CurrentPath {
    let n = traj.params().n();
    let (times, steps) = traj
        .events()
        .iter()
        .map(|&(t, e)| {
            let (i, d) = increment(e, n);
            (t, (i as u32, d as i8))
        })
        .unzip();
    CurrentPath { n, times, steps }
}

/// Verifies η_t(x) - η_0(x) = J_{x-1,x}(t) - J_{x,x+1}(t) for every site
/// after every jump.
pub fn check_conservation(traj: &Trajectory) -> Result<()> {
    let n = traj.params().n();
    let init = traj.initial();
    let mut c = init.clone();
    let mut j = vec![0i64; n];
    for (k, &(t, e)) in traj.events().iter().enumerate() {
        e.apply(&mut c);
        let (i, d) = increment(e, n);
        j[i] += d;
        for x in 1..n {
            let lhs = c.get(x) as i64 - init.get(x) as i64;
            if lhs != j[x - 1] - j[x] {
                return Err(Error::Invalid(format!(
                    "conservation fails at site {x} after event {k} (t = {t})"
                )));
            }
        }
    }
    Ok(())
}
