//! Occupation configurations and initial-state constructors.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::rng::rng_from_seed;

/// Occupation variables η(1), …, η(n-1). Sites are addressed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    occ: Vec<u8>,
}

impl Configuration {
    /// `occ[x-1] = η(x)`; entries must be 0 or 1 and `n = occ.len() + 1 ≥ 3`.
    pub fn new(occ: Vec<u8>) -> Result<Self> {
        if occ.len() < 2 {
            return Err(Error::Invalid(format!(
                "configuration needs at least 2 sites, got {}",
                occ.len()
            )));
        }
        if let Some(v) = occ.iter().find(|&&v| v > 1) {
            return Err(Error::Invalid(format!("occupation value {v} is not 0 or 1")));
        }
        Ok(Configuration { occ })
    }

    pub fn empty(n: usize) -> Self {
        Configuration { occ: vec![0; n - 1] }
    }

    pub fn full(n: usize) -> Self {
        Configuration { occ: vec![1; n - 1] }
    }

    /// Lattice parameter n (number of sites + 1).
    pub fn n(&self) -> usize {
        self.occ.len() + 1
    }

    pub fn sites(&self) -> usize {
        self.occ.len()
    }

    #[inline]
    pub fn get(&self, site: usize) -> u8 {
        self.occ[site - 1]
    }

    /// η ↦ σ^x η.
    #[inline]
    pub fn flip(&mut self, site: usize) {
        self.occ[site - 1] ^= 1;
    }

    /// η ↦ η^{x,x+1}.
    #[inline]
    pub fn swap(&mut self, x: usize) {
        self.occ.swap(x - 1, x);
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.occ
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&v| v as usize).sum()
    }

    /// Whether bond (x, x+1) carries different occupations.
    #[inline]
    pub fn discordant(&self, x: usize) -> bool {
        self.occ[x - 1] != self.occ[x]
    }

    /// Index into the 2^{n-1} state space, bit x-1 holding η(x).
    pub fn state_index(&self) -> usize {
        self.occ
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &v)| acc | ((v as usize) << i))
    }

    pub fn from_state_index(n: usize, index: usize) -> Self {
        Configuration {
            occ: (0..n - 1).map(|i| ((index >> i) & 1) as u8).collect(),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.occ {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let occ = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Invalid(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Configuration::new(occ)
    }
}

/// Independent sites with P[η(x) = 1] = ρ(x/n); deterministic in `seed`.
pub fn sample_bernoulli_product(profile: impl Fn(f64) -> f64, n: usize, seed: u64) -> Result<Configuration> {
    let mut rng = rng_from_seed(seed);
    sample_bernoulli_with(profile, n, &mut rng)
}

pub fn sample_bernoulli_with<R: Rng + ?Sized>(
    profile: impl Fn(f64) -> f64,
    n: usize,
    rng: &mut R,
) -> Result<Configuration> {
    if n < 3 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            reason: "need at least two sites (n >= 3)",
        });
    }
    let mut occ = Vec::with_capacity(n - 1);
    for x in 1..n {
        let p = profile(x as f64 / n as f64);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError {
                what: "Bernoulli parameter",
                value: p,
            });
        }
        let u: f64 = rng.random();
        occ.push(u8::from(u < p));
    }
    Ok(Configuration { occ })
}

/// Quantile rounding of γ: η(x) = 1 iff ⌊n Γ(x/n)⌋ > ⌊n Γ((x-1)/n)⌋ with
/// Γ(u) = ∫_0^u γ.
pub fn deterministic_config(profile: &Profile, n: usize) -> Result<Configuration> {
    if n < 3 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            reason: "need at least two sites (n >= 3)",
        });
    }
    // Guards against n·Γ landing a rounding error below an integer.
    const SLACK: f64 = 1e-9;
    let nf = n as f64;
    let level = |x: usize| (nf * profile.cumulative(x as f64 / nf) + SLACK).floor();
    let mut prev = level(0);
    let mut occ = Vec::with_capacity(n - 1);
    for x in 1..n {
        let cur = level(x);
        occ.push(u8::from(cur > prev));
        prev = cur;
    }
    Ok(Configuration { occ })
}
