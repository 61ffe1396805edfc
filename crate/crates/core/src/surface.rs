//! Interval surfaces over a grid of bounds, and threshold regions on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{confounding_interval, BoundsSpec, SearchConfig};
use crate::regression::SufficientStats;

/// Bounds axes stop short of 1, where the adjusted slope is singular.
pub const AXIS_CAP: f64 = 1.0 - 1e-3;

/// `L` and `U` tabulated over `bx_axis x by_axis`; `lower[i][j]` is at
/// `(bx_axis[i], by_axis[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub stats: Option<SufficientStats>,
    pub bx_axis: Vec<f64>,
    pub by_axis: Vec<f64>,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl SurfaceGrid {
    pub fn shape(&self) -> (usize, usize) {
        (self.bx_axis.len(), self.by_axis.len())
    }

    /// Index of the grid cell closest to `(bx, by)`.
    pub fn nearest(&self, bx: f64, by: f64) -> (usize, usize) {
        let closest = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map_or(0, |(i, _)| i)
        };
        (closest(&self.bx_axis, bx), closest(&self.by_axis, by))
    }
}

fn axis(start: f64, resolution: usize) -> Vec<f64> {
    let m = (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            if i + 1 == resolution {
                AXIS_CAP
            } else {
                start + (AXIS_CAP - start) * (i as f64 / m)
            }
        })
        .collect()
}

/// Computes `L` and `U` on a `resolution x resolution` grid of bounds from
/// the measured R^2 values up to [`AXIS_CAP`].
pub fn compute_surface(
    stats: &SufficientStats,
    resolution: usize,
    rho_f_bounds: Option<[f64; 2]>,
    search: &SearchConfig,
) -> Result<SurfaceGrid> {
    stats.validate()?;
    if resolution < 2 {
        return Err(Error::Input(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    for (name, r2) in [("r2_wx", stats.r2_wx), ("r2_wy", stats.r2_wy)] {
        if r2 >= AXIS_CAP {
            return Err(Error::Domain(format!(
                "{name} = {r2} leaves no room below the axis cap {AXIS_CAP}"
            )));
        }
    }
    let bx_axis = axis(stats.r2_wx, resolution);
    let by_axis = axis(stats.r2_wy, resolution);
    let cells: Vec<(f64, f64)> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let bounds = BoundsSpec::new(bx_axis[k / resolution], by_axis[k % resolution]);
            confounding_interval(stats, &bounds, rho_f_bounds, search)
                .map(|ci| (ci.lower, ci.upper))
        })
        .collect::<Result<_>>()?;
    let (lower, upper) = cells
        .chunks(resolution)
        .map(|row| row.iter().copied().unzip::<f64, f64, Vec<_>, Vec<_>>())
        .unzip();
    Ok(SurfaceGrid {
        stats: Some(*stats),
        bx_axis,
        by_axis,
        lower,
        upper,
    })
}

/// Which side of the threshold counts as practically significant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Significant when the whole interval lies at or below `beta_star`
    /// (`U <= beta_star`).
    #[default]
    #[serde(rename = "below", alias = "effect-below-threshold")]
    Below,
    /// Significant when the whole interval lies at or above `beta_star`
    /// (`L >= beta_star`).
    #[serde(rename = "above", alias = "effect-above-threshold")]
    Above,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below" | "effect-below-threshold" => Ok(Self::Below),
            "above" | "effect-above-threshold" => Ok(Self::Above),
            other => Err(Error::Input(format!(
                "unknown direction '{other}' (expected 'below' or 'above')"
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Below => "below",
            Self::Above => "above",
        })
    }
}

/// Bounds pairs that guarantee an effect beyond `beta_star`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRegion {
    pub beta_star: f64,
    pub direction: Direction,
    pub bx_axis: Vec<f64>,
    pub by_axis: Vec<f64>,
    /// Row-major, `mask[i][j]` at `(bx_axis[i], by_axis[j])`.
    pub mask: Vec<Vec<bool>>,
    /// `(bx, by)` vertices of the level set `field = beta_star`, ordered by
    /// increasing `bx` (decreasing `by` on ties).
    pub contour: Vec<[f64; 2]>,
    pub empty: bool,
}

impl ThresholdRegion {
    pub fn contains(&self, grid_index: (usize, usize)) -> bool {
        self.mask[grid_index.0][grid_index.1]
    }
}

/// Marks the cells where the interval clears `beta_star` and traces the
/// boundary by linear interpolation along grid edges.
pub fn threshold_region(
    grid: &SurfaceGrid,
    beta_star: f64,
    direction: Direction,
) -> Result<ThresholdRegion> {
    if !beta_star.is_finite() {
        return Err(Error::Input(format!(
            "beta_star must be finite, got {beta_star}"
        )));
    }
    let (nx, ny) = grid.shape();
    let field = match direction {
        Direction::Below => &grid.upper,
        Direction::Above => &grid.lower,
    };
    if field.len() != nx || field.iter().any(|r| r.len() != ny) {
        return Err(Error::Input(
            "surface matrices do not match the axes".into(),
        ));
    }
    let inside = |v: f64| match direction {
        Direction::Below => v <= beta_star,
        Direction::Above => v >= beta_star,
    };
    let mask: Vec<Vec<bool>> = field
        .iter()
        .map(|row| row.iter().map(|&v| inside(v)).collect())
        .collect();

    let crossing = |fa: f64, fb: f64| ((beta_star - fa) / (fb - fa)).clamp(0.0, 1.0);
    let mut contour = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if j + 1 < ny && mask[i][j] != mask[i][j + 1] {
                let t = crossing(field[i][j], field[i][j + 1]);
                let by = grid.by_axis[j] + t * (grid.by_axis[j + 1] - grid.by_axis[j]);
                contour.push([grid.bx_axis[i], by]);
            }
            if i + 1 < nx && mask[i][j] != mask[i + 1][j] {
                let t = crossing(field[i][j], field[i + 1][j]);
                let bx = grid.bx_axis[i] + t * (grid.bx_axis[i + 1] - grid.bx_axis[i]);
                contour.push([bx, grid.by_axis[j]]);
            }
        }
    }
    contour.sort_by(|a, b| a[0].total_cmp(&b[0]).then(b[1].total_cmp(&a[1])));
    contour.dedup();
    let empty = !mask.iter().flatten().any(|&m| m);
    Ok(ThresholdRegion {
        beta_star,
        direction,
        bx_axis: grid.bx_axis.clone(),
        by_axis: grid.by_axis.clone(),
        mask,
        contour,
        empty,
    })
}
