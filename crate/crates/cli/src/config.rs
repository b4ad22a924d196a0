//! Run configuration: one JSON document naming the model, the initial law,
//! the tilt and the per-command settings. Analytic profiles and fields come
//! from a small registry so that common test shapes need no files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use epsb::field::{AnalyticField, FieldClass, SpaceFn, SpaceTimeField, TimePoly};
use epsb::kmc::Tilt;
use epsb::ldp::{InitialLaw, ReplacementSite};
use epsb::params::{RawParams, Regime};
use epsb::profile::DEFAULT_DELTA;
use epsb::{profile_g_alpha_beta, ModelParams, Profile};

use crate::CliError;

/// Named analytic shape with a coefficient array, or a CSV file.
///
/// | name           | coefficients                         | value                         |
/// |----------------|--------------------------------------|-------------------------------|
/// | `linear`       | `[a, b]`                             | a + b·u                       |
/// | `sine`         | `[c, amp]` or `[c, amp, k]`          | c + amp·sin(kπu)              |
/// | `cosine`       | `[c, amp]` or `[c, amp, k]`          | c + amp·cos(kπu)              |
/// | `bump`         | `[c, amp, center, width]`            | c + amp·bump((u-center)/width)|
/// | `g_alpha_beta` | `[]` or `[delta]`                    | the reservoir-matched profile |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeSpec {
    Named {
        name: String,
        #[serde(default)]
        coeffs: Vec<f64>,
    },
    Csv {
        csv: PathBuf,
    },
}

fn coeff(coeffs: &[f64], i: usize, default: Option<f64>, key: &str) -> Result<f64, CliError> {
    coeffs
        .get(i)
        .copied()
        .or(default)
        .ok_or_else(|| CliError::config(key, format!("missing coefficient {i}")))
}

fn expect_len(coeffs: &[f64], range: std::ops::RangeInclusive<usize>, key: &str) -> Result<(), CliError> {
    if range.contains(&coeffs.len()) {
        Ok(())
    } else {
        Err(CliError::config(
            key,
            format!("expected {}..={} coefficients, got {}", range.start(), range.end(), coeffs.len()),
        ))
    }
}

fn wave_number(c: f64, key: &str) -> Result<u32, CliError> {
    if c >= 1.0 && c.fract() == 0.0 && c <= u32::MAX as f64 {
        Ok(c as u32)
    } else {
        Err(CliError::config(key, format!("wave number {c} is not a positive integer")))
    }
}

impl ShapeSpec {
    /// Terms (constant part, spatial part) of the registry shape.
    fn space_terms(&self, key: &str) -> Result<Vec<SpaceFn>, CliError> {
        let ShapeSpec::Named { name, coeffs } = self else {
            return Err(CliError::config(key, "a CSV grid cannot be used as an analytic shape"));
        };
        let c = coeffs.as_slice();
        let mut terms = Vec::new();
        match name.as_str() {
            "linear" => {
                expect_len(c, 2..=2, key)?;
                terms.push(SpaceFn::Linear {
                    intercept: c[0],
                    slope: c[1],
                });
            }
            "sine" | "cosine" => {
                expect_len(c, 2..=3, key)?;
                let k = wave_number(coeff(c, 2, Some(1.0), key)?, key)?;
                if c[0] != 0.0 {
                    terms.push(SpaceFn::Constant { value: c[0] });
                }
                terms.push(if name == "sine" {
                    SpaceFn::Sine { k, amp: c[1] }
                } else {
                    SpaceFn::Cosine { k, amp: c[1] }
                });
            }
            "bump" => {
                expect_len(c, 4..=4, key)?;
                if c[0] != 0.0 {
                    terms.push(SpaceFn::Constant { value: c[0] });
                }
                terms.push(SpaceFn::Bump {
                    center: c[2],
                    width: c[3],
                    amp: c[1],
                });
            }
            "g_alpha_beta" => {
                return Err(CliError::config(key, "g_alpha_beta is a density profile, not a field"));
            }
            other => return Err(CliError::config(key, format!("unknown shape '{other}'"))),
        }
        Ok(terms)
    }

    /// The shape as a density profile on `intervals` cells.
    pub fn profile(&self, params: &ModelParams, intervals: usize, key: &str) -> Result<Profile, CliError> {
        match self {
            ShapeSpec::Csv { csv } => {
                let text = std::fs::read_to_string(csv)
                    .map_err(|e| CliError::config(key, format!("{}: {e}", csv.display())))?;
                Profile::from_csv(&text).map_err(|e| CliError::config(key, e.to_string()))
            }
            ShapeSpec::Named { name, coeffs } if name == "g_alpha_beta" => {
                expect_len(coeffs, 0..=1, key)?;
                let delta = coeffs.first().copied().unwrap_or(DEFAULT_DELTA);
                profile_g_alpha_beta(params.alpha(), params.beta(), delta, intervals)
                    .map_err(|e| CliError::config(key, e.to_string()))
            }
            ShapeSpec::Named { .. } => {
                let terms = self.space_terms(key)?;
                Profile::from_fn(intervals, |u| terms.iter().map(|t| t.value(u)).sum())
                    .map_err(|e| CliError::config(key, e.to_string()))
            }
        }
    }
}

/// How replicas are started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// Quantile rounding of the profile; identical for every replica.
    #[default]
    Deterministic,
    /// Independent Bernoulli sites with the profile as marginals.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub law: LawKind,
    pub profile: ShapeSpec,
}

/// A tilt: a registry shape times an optional polynomial in time, a sum of
/// explicit terms, or a grid CSV with rows `t,u,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    /// Polynomial coefficients in t multiplying `shape`; default constant 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<AnalyticField>,
    /// Field class; defaults to vanishing at the ends for θ < 1 and free
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<FieldClass>,
}

/// Grid resolutions shared by the PDE-based commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub intervals: usize,
    pub rows: usize,
    pub eps: f64,
    pub snapshots: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            intervals: 128,
            rows: 65,
            eps: 0.05,
            snapshots: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HydroSpec {
    /// Largest weak residual accepted.
    pub residual_tol: f64,
    /// Spectral modes for the oracle comparison (untilted runs only).
    pub modes: usize,
}

impl Default for HydroSpec {
    fn default() -> Self {
        HydroSpec {
            residual_tol: 1e-5,
            modes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateSpec {
    pub time_nodes: usize,
    pub space_modes: usize,
}

impl Default for RateSpec {
    fn default() -> Self {
        RateSpec {
            time_nodes: 5,
            space_modes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySpec {
    pub ns: Vec<usize>,
}

impl Default for EntropySpec {
    fn default() -> Self {
        EntropySpec { ns: vec![32, 64] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailsSpec {
    pub ns: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Box fraction of the replacement observable.
    pub eps: f64,
    pub site: ReplacementSite,
    /// Test function of the replacement observable.
    pub phi: ShapeSpec,
    /// θ used by the replacement experiment; the tail experiments use the
    /// model θ, which must exceed 1.
    pub replacement_theta: Option<f64>,
}

impl Default for TailsSpec {
    fn default() -> Self {
        TailsSpec {
            ns: vec![32, 64],
            lambdas: vec![0.05],
            eps: 0.1,
            site: ReplacementSite::Left,
            phi: ShapeSpec::Named {
                name: "linear".into(),
                coeffs: vec![1.0, 0.0],
            },
            replacement_theta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    /// Largest total-variation distance accepted.
    pub tv_tol: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { tv_tol: 0.01 }
    }
}

/// The full run description. Every field has a serialised form, so the
/// manifest written after a run is itself a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub params: RawParams,
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<TiltSpec>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub hydro: HydroSpec,
    #[serde(default)]
    pub rate: RateSpec,
    #[serde(default)]
    pub entropy: EntropySpec,
    #[serde(default)]
    pub tails: TailsSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
}

fn default_replicas() -> usize {
    16
}

/// A manifest wraps the configuration it was produced from.
#[derive(Deserialize)]
struct ManifestShell {
    config: RunConfig,
}

impl RunConfig {
    /// Reads a configuration or a manifest emitted by an earlier run.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config("<document>", e.to_string()))?;
        let cfg = if value.get("config").is_some() {
            serde_json::from_value::<ManifestShell>(value).map(|m| m.config)
        } else {
            serde_json::from_value::<RunConfig>(value)
        }
        .map_err(|e| CliError::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model()?;
        if self.replicas == 0 {
            return Err(CliError::config("replicas", "must be positive"));
        }
        let g = &self.grid;
        if g.intervals < 8 {
            return Err(CliError::config("grid.intervals", "need at least 8 cells"));
        }
        if g.rows < 3 {
            return Err(CliError::config("grid.rows", "need at least 3 output rows"));
        }
        if !(g.eps > 0.0 && g.eps < 0.5) {
            return Err(CliError::config("grid.eps", "must lie in (0, 1/2)"));
        }
        if g.snapshots == 0 {
            return Err(CliError::config("grid.snapshots", "must be positive"));
        }
        if self.tails.ns.iter().chain(&self.entropy.ns).any(|&n| n < 3) {
            return Err(CliError::config("ns", "every n must be at least 3"));
        }
        if self.tails.lambdas.iter().any(|l| l.is_nan() || *l <= 0.0) {
            return Err(CliError::config("tails.lambdas", "levels must be positive"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        ModelParams::try_from(self.params).map_err(|e| {
            let key = match &e {
                epsb::Error::OutOfRange { name, .. } => format!("params.{name}"),
                _ => "params".into(),
            };
            CliError::config(&key, e.to_string())
        })
    }

    pub fn initial_profile(&self, params: &ModelParams) -> Result<Profile, CliError> {
        self.initial.profile.profile(params, self.grid.intervals, "initial.profile")
    }

    pub fn initial_law(&self, params: &ModelParams) -> Result<InitialLaw, CliError> {
        let p = self.initial_profile(params)?;
        Ok(match self.initial.law {
            LawKind::Deterministic => InitialLaw::Deterministic(p),
            LawKind::Bernoulli => InitialLaw::Bernoulli(p),
        })
    }

    /// The tilt field sampled on the configured grid, if any.
    pub fn tilt_field(&self, params: &ModelParams) -> Result<Option<SpaceTimeField>, CliError> {
        let Some(spec) = &self.tilt else {
            return Ok(None);
        };
        let class = spec.class.unwrap_or(match params.regime() {
            Regime::Dirichlet => FieldClass::DirichletZero,
            _ => FieldClass::Free,
        });
        let horizon = params.horizon();
        let analytic = match (&spec.shape, &spec.field) {
            (Some(ShapeSpec::Csv { csv }), None) => {
                let text = std::fs::read_to_string(csv)
                    .map_err(|e| CliError::config("tilt.shape", format!("{}: {e}", csv.display())))?;
                let grid = grid_rows(&text).map_err(|e| CliError::config("tilt.shape", e))?;
                return SpaceTimeField::from_rows(horizon, grid, class)
                    .map(Some)
                    .map_err(|e| CliError::config("tilt.shape", e.to_string()));
            }
            (Some(shape), None) => {
                let time = TimePoly {
                    coeffs: spec.time.clone().unwrap_or_else(|| vec![1.0]),
                };
                let mut f = AnalyticField::zero();
                for s in shape.space_terms("tilt.shape")? {
                    f = f.plus(time.clone(), s);
                }
                f
            }
            (None, Some(field)) => field.clone(),
            _ => return Err(CliError::config("tilt", "give exactly one of 'shape' or 'field'")),
        };
        SpaceTimeField::from_analytic(analytic, class, horizon, self.grid.rows, self.grid.intervals)
            .map(Some)
            .map_err(|e| CliError::config("tilt", e.to_string()))
    }

    pub fn tilt(&self, params: &ModelParams) -> Result<Option<Tilt>, CliError> {
        Ok(self.tilt_field(params)?.map(Tilt::new))
    }

    /// Replacement test function.
    pub fn phi(&self) -> Result<impl Fn(f64) -> f64 + Sync, CliError> {
        let terms = self.tails.phi.space_terms("tails.phi")?;
        Ok(move |u: f64| terms.iter().map(|t| t.value(u)).sum())
    }
}

/// Rows of a `t,u,value` CSV grouped by t, in file order.
fn grid_rows(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut current_t = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('t')) {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let [t, _, v] = cols[..] else {
            return Err(format!("line {}: expected t,u,value", lineno + 1));
        };
        if current_t != Some(t) {
            rows.push(Vec::new());
            current_t = Some(t);
        }
        rows.last_mut().expect("row pushed").push(v);
    }
    if rows.is_empty() {
        return Err("empty grid".into());
    }
    Ok(rows)
}

/// Default test functions for weak residuals: sin(kπu)·(1+t) vanish at the
/// ends, cos(kπu)·(1+t) for the Neumann form.
pub fn weak_test_fields(class: FieldClass, horizon: f64, rows: usize, intervals: usize) -> Vec<SpaceTimeField> {
    (1..=3u32)
        .map(|k| {
            let space = match class {
                FieldClass::DirichletZero => SpaceFn::Sine { k, amp: 1.0 },
                FieldClass::Free => SpaceFn::Cosine { k: k - 1, amp: 1.0 },
            };
            let f = AnalyticField::separable(TimePoly::linear(1.0, 1.0), space);
            SpaceTimeField::from_analytic(f, class, horizon, rows, intervals).expect("registry fields are valid")
        })
        .collect()
}
