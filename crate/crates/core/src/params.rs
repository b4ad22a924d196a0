use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hydrodynamic regime selected by the boundary slowdown exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// θ ∈ [0, 1): reservoirs fix the boundary densities.
    Dirichlet,
    /// θ = 1: simulated, but no hydrodynamic or variational statement applies.
    Critical,
    /// θ > 1: reservoirs are too slow to move mass at the diffusive scale.
    Neumann,
}

impl Regime {
    pub fn of(theta: f64) -> Regime {
        if theta < 1.0 {
            Regime::Dirichlet
        } else if theta == 1.0 {
            Regime::Critical
        } else {
            Regime::Neumann
        }
    }
}

/// Unvalidated parameter record, as read from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub n: usize,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
}

/// Validated model parameters. Sites are `1..=n-1`; reservoir densities are
/// `r_1 = alpha` on the left and `r_{n-1} = beta` on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    n: usize,
    theta: f64,
    alpha: f64,
    beta: f64,
    horizon: f64,
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            n: p.n,
            theta: p.theta,
            alpha: p.alpha,
            beta: p.beta,
            horizon: p.horizon,
        }
    }
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        validate_params(raw.n, raw.theta, raw.alpha, raw.beta, raw.horizon)
    }
}

/// Checks `n ≥ 3`, `α, β ∈ (0,1)`, `θ ≥ 0`, `T ≥ 0`.
/// θ = 1 is accepted; [`ModelParams::is_critical`] flags it.
pub fn validate_params(n: usize, theta: f64, alpha: f64, beta: f64, horizon: f64) -> Result<ModelParams> {
    if n < 3 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            reason: "need at least two sites (n >= 3)",
        });
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            reason: "must be finite and >= 0",
        });
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                reason: "reservoir density must lie in (0,1)",
            });
        }
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::OutOfRange {
            name: "horizon",
            value: horizon,
            reason: "must be finite and >= 0",
        });
    }
    Ok(ModelParams {
        n,
        theta,
        alpha,
        beta,
        horizon,
    })
}

impl ModelParams {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of lattice sites, `n - 1`.
    pub fn sites(&self) -> usize {
        self.n - 1
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.theta)
    }

    pub fn is_critical(&self) -> bool {
        self.regime() == Regime::Critical
    }

    /// Bulk exchange rate per discordant bond after diffusive speed-up: n².
    pub fn bulk_rate(&self) -> f64 {
        let n = self.n as f64;
        n * n
    }

    /// Boundary prefactor after speed-up: n² · n^{-θ}.
    pub fn boundary_rate(&self) -> f64 {
        (self.n as f64).powf(2.0 - self.theta)
    }

    /// Reservoir density at a boundary site (`1` or `n-1`).
    pub fn reservoir(&self, site: usize) -> f64 {
        if site == 1 {
            self.alpha
        } else {
            debug_assert_eq!(site, self.n - 1);
            self.beta
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self = validate_params(self.n, self.theta, self.alpha, self.beta, horizon)?;
        Ok(self)
    }

    pub fn with_n(self, n: usize) -> Result<Self> {
        validate_params(n, self.theta, self.alpha, self.beta, self.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_typical_params() {
        let p = validate_params(100, 0.5, 0.2, 0.8, 1.0).unwrap();
        assert_eq!(p.sites(), 99);
        assert_eq!(p.regime(), Regime::Dirichlet);
        assert!(!p.is_critical());
    }

    #[test]
    fn rejects_alpha_on_the_boundary() {
        let e = validate_params(100, 0.5, 0.0, 0.8, 1.0).unwrap_err();
        assert!(matches!(e, Error::OutOfRange { name: "alpha", .. }));
    }

    #[test]
    fn zero_horizon_and_minimal_lattice_are_valid() {
        let p = validate_params(3, 2.0, 0.5, 0.5, 0.0).unwrap();
        assert_eq!(p.horizon(), 0.0);
        assert_eq!(p.regime(), Regime::Neumann);
    }

    #[test]
    fn rejects_negative_theta_and_small_n() {
        assert!(matches!(
            validate_params(10, -1.0, 0.5, 0.5, 1.0),
            Err(Error::OutOfRange { name: "theta", .. })
        ));
        assert!(matches!(
            validate_params(2, 1.0, 0.5, 0.5, 1.0),
            Err(Error::OutOfRange { name: "n", .. })
        ));
    }

    #[test]
    fn critical_theta_is_flagged() {
        let p = validate_params(10, 1.0, 0.5, 0.5, 1.0).unwrap();
        assert!(p.is_critical());
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"n":10,"theta":0.5,"alpha":1.5,"beta":0.5,"horizon":1.0}"#;
        assert!(serde_json::from_str::<ModelParams>(bad).is_err());
        let good = r#"{"n":10,"theta":0.5,"alpha":0.5,"beta":0.5,"horizon":1.0}"#;
        let p: ModelParams = serde_json::from_str(good).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), good);
    }
}
