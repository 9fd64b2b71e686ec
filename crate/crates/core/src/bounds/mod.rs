//! Finite-time boundary-crossing bounds and their constants.

mod baseline;
mod config;
mod corollary;
mod cover;
mod omega;
mod theorem;
mod threshold;

pub use baseline::{dim1_maximal_bound, prior_bound_cgmms, sanov_bound};
pub use config::{constant_big_c, rho_epsilon, BoundConfig, BoundParams, CorollaryInputs};
pub use corollary::{
    cor1_bound, cor1_log_value, cor2_bound, cor2_constants, t_chi, t_chi_root, Cor2Constants, Cor2Value, Cor2Window,
};
pub use cover::{cone_cover, ConeCover, CERTIFY_SAMPLES};
pub use omega::omega;
pub use theorem::{check_scaled_monotonicity, peeling_grid, theorem_main_bound, ThresholdVariant};
pub use threshold::{threshold_f, ThresholdFn};
