//! The confounding-interval engine.

mod adjust;
mod bounds;
mod oracle;
mod search;
mod witness;

pub use adjust::{
    beta_adjusted, feasibility_matrix, is_feasible, AdjustmentPoint, Geometry, FEASIBILITY_TOL,
};
pub use bounds::{transform_bounds, BoundsSpec, TransformedBounds};
pub use oracle::{interval_by_sampling_oracle, MIN_ORACLE_SAMPLES};
pub use search::{
    confounding_interval, Algorithm, ConfoundingInterval, MethodMeta, SearchConfig, WITNESS_TOL,
};
pub use witness::{construct_witness, Witness, MIN_WITNESS_ROWS};
