//! Exponential families and their parameter-space geometry.

mod model;
mod params;
mod region;
mod sampling;

pub use model::{
    bregman, fenchel_dual, grad_log_partition, hessian_log_partition, log_partition, mean_to_natural, FamilyKind,
    FamilyModel,
};
pub use params::{Coords, MeanParam, NaturalParam};
pub(crate) use params::{dot, norm};
pub use region::{
    base_contains, region_curvature, region_curvature_with_grid, NaturalShape, ParamRegion, RegionBox,
    DEFAULT_GRID_POINTS, MAX_GRID_TOTAL,
};
pub use sampling::{replicate_rng, sample_sufficient_stats, Sampler, SufficientStatStream};
