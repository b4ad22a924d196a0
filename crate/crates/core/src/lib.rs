//! Exclusion process with slow boundary reservoirs: exact kinetic Monte Carlo
//! for the symmetric and weakly asymmetric dynamics, hydrodynamic PDE solvers,
//! rate-functional evaluation and large-deviation experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod empirical;
pub mod error;
pub mod field;
pub mod hydro;
pub mod kmc;
pub mod lattice;
pub mod ldp;
pub mod params;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod variational;

pub use error::{Error, Result};
pub use field::{AnalyticField, FieldClass, SpaceFn, SpaceTimeField, TimePoly};
pub use lattice::{deterministic_config, sample_bernoulli_product, Configuration};
pub use params::{validate_params, ModelParams, Regime};
pub use profile::{chi, profile_g_alpha_beta, Profile, SpaceTimeProfile};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
