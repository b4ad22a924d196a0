//! Path weights between the tilted and untilted dynamics, importance
//! sampling, relative-entropy estimates and the tail experiments behind the
//! superexponential estimates.

mod ensemble;
mod replacement;
mod tails;
mod weights;

pub use ensemble::{
    importance_probability, relative_entropy_rate, tilted_log_weights, EntropyEstimate, ImportanceEstimate,
    InitialLaw, WeightedEnsemble, WeightedSample,
};
pub use replacement::{replacement_residual, replacement_table, ReplacementRow, ReplacementSite};
pub use tails::{
    boundary_current_tail, boundary_rate_constant, mass_tail_experiment, mass_tail_table, poisson_ld_bound,
    poisson_tail_bound, CurrentTails, TailReport,
};
pub use weights::{jump_log_ratio, rn_log_weight, rn_log_weight_expanded, ExpandedWeight, RnWeight};
