//! Density profiles on uniform grids of [0,1] and their time-indexed
//! families.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static compressibility χ(u) = u(1-u).
pub fn chi(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::DomainError { what: "chi", value: u });
    }
    Ok(u * (1.0 - u))
}

/// χ without the domain check, for hot loops over values already known to
/// lie in [0,1].
#[inline]
pub(crate) fn chi_unchecked(u: f64) -> f64 {
    u * (1.0 - u)
}

/// A density profile sampled on `G + 1` uniform nodes of [0,1], linearly
/// interpolated between nodes. Values lie in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    grid_size: usize,
    values: Vec<f64>,
}

impl Profile {
    /// `values[i]` is the density at `u = i / G`; needs `G ≥ 2`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Invalid(format!(
                "profile needs at least 3 nodes (G >= 2), got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::DomainError {
                what: "profile value",
                value: *v,
            });
        }
        Ok(Profile { values })
    }

    /// Samples `f` at the nodes of a grid with `intervals` cells.
    pub fn from_fn(intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / intervals as f64;
        Profile::new((0..=intervals).map(|i| f(i as f64 * h)).collect())
    }

    pub fn constant(intervals: usize, c: f64) -> Result<Self> {
        Profile::from_fn(intervals, |_| c)
    }

    /// Number of grid cells G.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn du(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.du()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Linear interpolation; `u` is clamped to [0,1].
    pub fn eval(&self, u: f64) -> f64 {
        interp(&self.values, u)
    }

    /// Exact integral of the interpolant over [0,1].
    pub fn integral(&self) -> f64 {
        crate::quad::trapezoid(&self.values, self.du())
    }

    /// Exact integral of the interpolant over [0, u].
    pub fn cumulative(&self, u: f64) -> f64 {
        let g = self.intervals();
        let h = self.du();
        let u = u.clamp(0.0, 1.0);
        let k = ((u / h).floor() as usize).min(g - 1);
        let mut acc = 0.0;
        for i in 0..k {
            acc += 0.5 * h * (self.values[i] + self.values[i + 1]);
        }
        let s = u - k as f64 * h;
        let slope = (self.values[k + 1] - self.values[k]) / h;
        acc + s * self.values[k] + 0.5 * slope * s * s
    }

    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        move |u| self.eval(u)
    }

    /// Two-column CSV `u,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.node(i), v));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('u')) {
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::Invalid(format!("line {}: expected `u,value`", lineno + 1)))?;
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("line {}: {e}", lineno + 1)))?,
            );
        }
        Profile::new(values)
    }

    /// JSON grid object `{"grid_size": G, "values": [...]}` with G + 1 values.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ProfileJson {
            grid_size: self.intervals(),
            values: self.values.clone(),
        })
        .expect("profile serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ProfileJson = serde_json::from_str(text)?;
        if raw.values.len() != raw.grid_size + 1 {
            return Err(Error::Invalid(format!(
                "grid_size {} needs {} values, got {}",
                raw.grid_size,
                raw.grid_size + 1,
                raw.values.len()
            )));
        }
        Profile::new(raw.values)
    }
}

pub(crate) fn interp(values: &[f64], u: f64) -> f64 {
    let g = values.len() - 1;
    let x = u.clamp(0.0, 1.0) * g as f64;
    let k = (x.floor() as usize).min(g - 1);
    let s = x - k as f64;
    values[k] * (1.0 - s) + values[k + 1] * s
}

/// The reference profile: flat `alpha` on [0,δ], flat `beta` on [1-δ,1],
/// linear in between.
pub fn g_alpha_beta(alpha: f64, beta: f64, delta: f64) -> Result<impl Fn(f64) -> f64 + Copy> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            reason: "plateau width must lie in (0, 1/2)",
        });
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                reason: "density must lie in [0,1]",
            });
        }
    }
    Ok(move |u: f64| {
        if u <= delta {
            alpha
        } else if u >= 1.0 - delta {
            beta
        } else {
            alpha + (beta - alpha) * (u - delta) / (1.0 - 2.0 * delta)
        }
    })
}

/// Default plateau width of [`g_alpha_beta`].
pub const DEFAULT_DELTA: f64 = 0.25;

/// [`g_alpha_beta`] sampled on a grid with `intervals` cells.
pub fn profile_g_alpha_beta(alpha: f64, beta: f64, delta: f64, intervals: usize) -> Result<Profile> {
    Profile::from_fn(intervals, g_alpha_beta(alpha, beta, delta)?)
}

/// A family of profiles on a shared spatial grid, one per node of a uniform
/// time grid on [0, T]. Stored row-major (time major).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeProfile {
    horizon: f64,
    n_times: usize,
    n_space: usize,
    data: Vec<f64>,
}

const STP_MAGIC: &[u8; 4] = b"STPB";
const STP_VERSION: u32 = 1;

impl SpaceTimeProfile {
    /// Builds from rows; each row holds the values at one time node.
    /// Values must lie in [0,1].
    pub fn from_rows(horizon: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("space-time profile needs at least one time node".into()));
        }
        let n_space = rows[0].len();
        if n_space < 3 {
            return Err(Error::Invalid("spatial grid needs G >= 2".into()));
        }
        if rows.len() > 1 && !(horizon > 0.0) {
            return Err(Error::Invalid("several time nodes need a positive horizon".into()));
        }
        let n_times = rows.len();
        let mut data = Vec::with_capacity(n_times * n_space);
        for r in rows {
            if r.len() != n_space {
                return Err(Error::Invalid("rows have inconsistent spatial grids".into()));
            }
            if let Some(v) = r.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::DomainError {
                    what: "space-time profile value",
                    value: *v,
                });
            }
            data.extend(r);
        }
        Ok(SpaceTimeProfile {
            horizon,
            n_times,
            n_space,
            data,
        })
    }

    /// Samples ρ(t,u) on `n_times` time nodes and `intervals` spatial cells.
    pub fn from_fn(horizon: f64, n_times: usize, intervals: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let dt = if n_times > 1 { horizon / (n_times - 1) as f64 } else { 0.0 };
        let du = 1.0 / intervals as f64;
        let rows = (0..n_times)
            .map(|k| (0..=intervals).map(|i| f(k as f64 * dt, i as f64 * du)).collect())
            .collect();
        SpaceTimeProfile::from_rows(horizon, rows)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    /// Number of spatial nodes G + 1.
    pub fn n_space(&self) -> usize {
        self.n_space
    }

    pub fn intervals(&self) -> usize {
        self.n_space - 1
    }

    pub fn du(&self) -> f64 {
        1.0 / (self.n_space - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        if self.n_times > 1 {
            self.horizon / (self.n_times - 1) as f64
        } else {
            0.0
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_space..(k + 1) * self.n_space]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_space)
    }

    pub fn profile(&self, k: usize) -> Profile {
        Profile {
            values: self.row(k).to_vec(),
        }
    }

    pub fn first(&self) -> &[f64] {
        self.row(0)
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.n_times - 1)
    }

    /// Bilinear interpolation in (t, u).
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        if self.n_times == 1 {
            return interp(self.row(0), u);
        }
        let x = (t / self.horizon).clamp(0.0, 1.0) * (self.n_times - 1) as f64;
        let k = (x.floor() as usize).min(self.n_times - 2);
        let s = x - k as f64;
        interp(self.row(k), u) * (1.0 - s) + interp(self.row(k + 1), u) * s
    }

    /// Spatial integral (trapezoid) at each time node.
    pub fn masses(&self) -> Vec<f64> {
        let h = self.du();
        self.rows().map(|r| crate::quad::trapezoid(r, h)).collect()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// CSV with columns `t,u,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,u,value\n");
        let du = self.du();
        for k in 0..self.n_times {
            let t = self.time(k);
            for (i, v) in self.row(k).iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", t, i as f64 * du, v));
            }
        }
        s
    }

    /// Compact binary dump: magic `STPB`, u32 version, u64 time nodes,
    /// u64 space nodes, f64 horizon, then row-major f64 values; all
    /// little-endian.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(STP_MAGIC)?;
        w.write_all(&STP_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_times as u64).to_le_bytes())?;
        w.write_all(&(self.n_space as u64).to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != STP_MAGIC {
            return Err(Error::Invalid("not a space-time profile dump".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != STP_VERSION {
            return Err(Error::Invalid("unsupported dump version".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n_times = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let n_space = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let horizon = f64::from_le_bytes(b8);
        let mut rows = Vec::with_capacity(n_times);
        for _ in 0..n_times {
            let mut row = Vec::with_capacity(n_space);
            for _ in 0..n_space {
                r.read_exact(&mut b8)?;
                row.push(f64::from_le_bytes(b8));
            }
            rows.push(row);
        }
        SpaceTimeProfile::from_rows(horizon, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_values() {
        assert_eq!(chi(0.0).unwrap(), 0.0);
        assert_eq!(chi(0.5).unwrap(), 0.25);
        assert!((chi(0.2).unwrap() - 0.16).abs() < 1e-15);
        assert!(matches!(chi(1.2), Err(Error::DomainError { .. })));
    }

    #[test]
    fn g_alpha_beta_plateaus_and_midpoint() {
        let g = g_alpha_beta(0.2, 0.8, 0.25).unwrap();
        assert_eq!(g(0.0), 0.2);
        assert_eq!(g(0.25), 0.2);
        assert!((g(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(g(0.9), 0.8);
        let flat = profile_g_alpha_beta(0.5, 0.5, 0.25, 64).unwrap();
        assert!(flat.values().iter().all(|&v| v == 0.5));
        assert!(g_alpha_beta(0.2, 0.8, 0.5).is_err());
        assert!(g_alpha_beta(0.2, 0.8, 0.0).is_err());
    }

    #[test]
    fn g_alpha_beta_slope_bound() {
        let (a, b, d) = (0.1, 0.7, 0.2);
        let p = profile_g_alpha_beta(a, b, d, 200).unwrap();
        let slope = (b - a) / (1.0 - 2.0 * d);
        for w in p.values().windows(2) {
            assert!((w[1] - w[0]).abs() <= slope * p.du() + 1e-14);
        }
    }

    #[test]
    fn profile_rejects_out_of_range() {
        assert!(Profile::new(vec![0.0, 1.2, 0.3]).is_err());
        assert!(Profile::new(vec![0.0, 0.2]).is_err());
    }

    #[test]
    fn cumulative_is_exact_for_linear() {
        let p = Profile::from_fn(10, |u| u).unwrap();
        for &u in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((p.cumulative(u) - 0.5 * u * u).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let p = Profile::from_fn(8, |u| 0.5 + 0.25 * u).unwrap();
        assert_eq!(Profile::from_csv(&p.to_csv()).unwrap(), p);
        let j = p.to_json();
        assert!(j.starts_with("{\"grid_size\":8,"));
        assert_eq!(Profile::from_json(&j).unwrap(), p);
    }

    #[test]
    fn binary_dump_round_trip() {
        let s = SpaceTimeProfile::from_fn(0.5, 4, 6, |t, u| 0.5 + 0.1 * t * u).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 8 + 8 * 4 * 7);
        assert_eq!(SpaceTimeProfile::read_binary(&buf[..]).unwrap(), s);
    }

    #[test]
    fn bilinear_eval() {
        let s = SpaceTimeProfile::from_fn(1.0, 3, 4, |t, u| 0.25 * (t + u)).unwrap();
        assert!((s.eval(0.3, 0.6) - 0.225).abs() < 1e-14);
    }
}
