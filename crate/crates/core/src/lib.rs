//! Confounding intervals for a multiple-regression slope.
//!
//! Given data `(y, x, w)` and bounds on how much an unmeasured `u` could
//! explain of `x` and of `y`, the slope of `x` in the regression that also
//! adjusts for `u` is only partially identified. This crate computes the
//! interval of slopes consistent with the bounds, tabulates it over a grid of
//! bounds, finds the bounds that still guarantee an effect beyond a
//! threshold, and builds explicit confounders that attain the endpoints.
//!
//! ```
//! use confint_core::{confounding_interval, BoundsSpec, SearchConfig, SufficientStats};
//!
//! let stats = SufficientStats::from_summary(1.62, -0.48, 0.14, 0.28).unwrap();
//! let ci = confounding_interval(&stats, &BoundsSpec::new(0.25, 0.40), None, &SearchConfig::default()).unwrap();
//! assert!(ci.upper < 0.0);
//! ```

pub mod api;
pub mod error;
pub mod export;
pub mod identify;
pub mod regression;
pub mod surface;
pub mod table;

pub use error::{Error, ErrorKind, Result};
pub use identify::{
    beta_adjusted, confounding_interval, construct_witness, feasibility_matrix,
    interval_by_sampling_oracle, is_feasible, transform_bounds, AdjustmentPoint, Algorithm,
    BoundsSpec, ConfoundingInterval, Geometry, MethodMeta, SearchConfig, TransformedBounds,
    Witness,
};
pub use regression::{
    fit_ols, partial_determination, prepare_dataset, residualize, sufficient_stats, Dataset,
    Labels, OlsFit, PrepareReport, SufficientStats, Units,
};
pub use surface::{compute_surface, threshold_region, Direction, SurfaceGrid, ThresholdRegion};
pub use table::{OutlierRule, PrepareOptions, RangeFilter, RawTable, Roles};
