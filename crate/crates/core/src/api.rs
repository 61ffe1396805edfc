//! Request shapes shared by the command line and the HTTP service.
//!
//! Both front ends parse their inputs into these types, run them through the
//! same functions and serialize with [`to_json`], so identical requests give
//! identical bytes.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::export::to_json;
use crate::identify::{
    confounding_interval, BoundsSpec, ConfoundingInterval, Geometry, SearchConfig,
};
use crate::regression::{prepare_dataset, sufficient_stats, PrepareReport, SufficientStats};
use crate::surface::{compute_surface, threshold_region, Direction, SurfaceGrid, ThresholdRegion};
use crate::table::{PrepareOptions, RawTable, Roles};

pub const DEFAULT_RESOLUTION: usize = 51;

/// Knobs of the interval search. `grid_points` falls back to the default for
/// single intervals and to the coarser surface grid for surfaces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    #[serde(default)]
    pub rho_f_bounds: Option<[f64; 2]>,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub grid_points: Option<usize>,
}

impl SearchOptions {
    fn config(&self, base: SearchConfig) -> SearchConfig {
        let base = base.with_geometry(self.geometry);
        match self.grid_points {
            Some(n) => base.with_grid_points(n),
            None => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalQuery {
    pub bx: f64,
    pub by: f64,
    #[serde(flatten)]
    pub search: SearchOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceQuery {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(flatten)]
    pub search: SearchOptions,
}

impl Default for SurfaceQuery {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            search: SearchOptions::default(),
        }
    }
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionQuery {
    pub beta_star: f64,
    #[serde(default)]
    pub direction: Direction,
    #[serde(flatten)]
    pub surface: SurfaceQuery,
}

/// Reads a CSV table and reduces it to sufficient statistics.
pub fn stats_from_csv(
    text: &str,
    roles: &Roles,
    options: &PrepareOptions,
) -> Result<(SufficientStats, PrepareReport)> {
    let table = RawTable::from_csv_str(text)?;
    let (data, report) = prepare_dataset(&table, roles, options)?;
    Ok((sufficient_stats(&data)?, report))
}

pub fn run_interval(stats: &SufficientStats, q: &IntervalQuery) -> Result<ConfoundingInterval> {
    let config = q.search.config(SearchConfig::default());
    confounding_interval(
        stats,
        &BoundsSpec::new(q.bx, q.by),
        q.search.rho_f_bounds,
        &config,
    )
}

pub fn run_surface(stats: &SufficientStats, q: &SurfaceQuery) -> Result<SurfaceGrid> {
    let config = q.search.config(SearchConfig::surface());
    compute_surface(stats, q.resolution, q.search.rho_f_bounds, &config)
}

pub fn run_region(stats: &SufficientStats, q: &RegionQuery) -> Result<ThresholdRegion> {
    let grid = run_surface(stats, &q.surface)?;
    threshold_region(&grid, q.beta_star, q.direction)
}

pub fn render_stats(stats: &SufficientStats) -> String {
    to_json(stats)
}

pub fn render_interval(stats: &SufficientStats, q: &IntervalQuery) -> Result<String> {
    run_interval(stats, q).map(|ci| to_json(&ci))
}

pub fn render_surface(stats: &SufficientStats, q: &SurfaceQuery) -> Result<String> {
    run_surface(stats, q).map(|g| to_json(&g))
}

pub fn render_region(stats: &SufficientStats, q: &RegionQuery) -> Result<String> {
    run_region(stats, q).map(|r| to_json(&r))
}
