//! Exponential-family geometry, KL-UCB index policies and explicit
//! finite-time boundary-crossing bounds.
//!
//! The crate is organised bottom-up:
//!
//! - [`expfam`]: log-partition functions, Bregman divergences, parameter maps,
//!   sampling and curvature bounds over parameter regions.
//! - [`kinf`]: the projected divergence `K_inf(ν_θ, μ)` (closed forms, the
//!   one-dimensional discrete dual and a generic constrained solver) together
//!   with the KKT residual used to certify solutions.
//! - [`bounds`]: threshold functions, cone coverings, the peeled-sum bound and
//!   its two corollaries, the older `f(t)` baseline, the one-dimensional
//!   maximal inequality and the Sanov bound.
//! - [`bandit`]: KL-UCB and KL-UCB+ episodes with regret and crossing
//!   counters.
//! - [`mcverify`]: Monte-Carlo and exact dynamic-programming estimates of
//!   crossing probabilities, compared against the bounds.
//! - [`cli`]: JSON-configured experiment runner behind the `klbound` binary.

pub mod bandit;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod expfam;
pub mod kinf;
pub mod mcverify;
mod parallel;

pub use error::{Error, Result};
pub use expfam::{FamilyModel, MeanParam, NaturalParam, ParamRegion, RegionBox};
pub use kinf::{kinf, KinfResult};
