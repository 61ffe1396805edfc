//! Grid search with nested shrinking-neighbourhood refinement for the lower
//! and upper ends of the confounding interval.
//!
//! The search runs on the dimensionless factor `(rho - rx ry rho_f)/(1 - rx^2)`
//! and multiplies by `sd_ratio` only at the end, so the parameter path does not
//! depend on the scale of the data.
//!
//! For fixed `(rx, ry)` the factor is linear in `rho_f`, so its extremes over
//! the admissible `rho_f` range sit at the range's endpoints. Refinement uses
//! that profile and searches `rx` (outer) and `ry` (inner) by pattern search
//! with step halving.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adjust::{adjustment_factor, is_feasible, rho_f_range, AdjustmentPoint, Geometry};
use super::bounds::{transform_bounds, BoundsSpec, TransformedBounds};
use crate::error::{Error, Result};
use crate::regression::SufficientStats;

/// Tolerance used when checking whether a returned endpoint is realizable.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid points per axis over `rx`, `ry` and `rho_f`.
    pub grid_points: usize,
    /// Cap on pattern-search steps per coordinate.
    pub max_refine_iterations: usize,
    pub geometry: Geometry,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 201,
            max_refine_iterations: 400,
            geometry: Geometry::Box,
        }
    }
}

impl SearchConfig {
    /// Coarser grid used per cell when tabulating whole surfaces.
    pub fn surface() -> Self {
        Self {
            grid_points: 21,
            ..Self::default()
        }
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_grid_points(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::Input(format!(
                "grid_points must be at least 2, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GridRefine,
    Sampling,
}

/// How an interval was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodMeta {
    pub algorithm: Algorithm,
    pub geometry: Geometry,
    pub rho_f_bounds: [f64; 2],
    pub tbx: f64,
    pub tby: f64,
    pub grid_points: usize,
    /// Pattern-search steps taken for the lower and upper endpoints.
    pub refine_iterations: [usize; 2],
    pub samples: usize,
    pub feasible_samples: usize,
    /// Whether each endpoint's parameter point is realized by some u.
    pub lower_realizable: bool,
    pub upper_realizable: bool,
}

/// `[lower, upper]` for the slope of x given {w, u}, with the parameter
/// points that attain each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfoundingInterval {
    pub bx: f64,
    pub by: f64,
    pub beta_xy_given_w: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: AdjustmentPoint,
    pub upper_witness: AdjustmentPoint,
    pub method: MethodMeta,
}

impl ConfoundingInterval {
    /// True when zero lies outside the interval, i.e. the sign of the
    /// effect is identified.
    pub fn sign_identified(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }

    pub fn contains(&self, beta: f64) -> bool {
        self.lower <= beta && beta <= self.upper
    }
}

pub(crate) fn check_rho_f_bounds(rho_f_bounds: Option<[f64; 2]>) -> Result<[f64; 2]> {
    let [lo, hi] = rho_f_bounds.unwrap_or([-1.0, 1.0]);
    if !(-1.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Input(format!(
            "rho_f bounds [{lo}, {hi}] must satisfy -1 <= lo <= hi <= 1"
        )));
    }
    Ok([lo, hi])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sense {
    Min,
    Max,
}

impl Sense {
    #[inline]
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Min => a < b,
            Sense::Max => a > b,
        }
    }
}

/// One profile evaluation: best factor over admissible `rho_f` at `(rx, ry)`.
#[derive(Debug, Clone, Copy)]
struct Eval {
    value: f64,
    rx: f64,
    ry: f64,
    rho_f: f64,
}

struct Problem {
    rho: f64,
    rx_max: f64,
    ry_max: f64,
    lo: f64,
    hi: f64,
    geometry: Geometry,
    grid_points: usize,
    max_iter: usize,
}

impl Problem {
    #[inline]
    fn profile(&self, rx: f64, ry: f64, sense: Sense) -> Option<Eval> {
        let (a, b) = rho_f_range(self.geometry, self.rho, rx, ry, self.lo, self.hi)?;
        let p = rx * ry;
        // The factor decreases in rho_f when p > 0; at p == 0 rho_f is irrelevant.
        let rho_f = if p > 0.0 {
            match sense {
                Sense::Min => b,
                Sense::Max => a,
            }
        } else {
            0.0f64.clamp(self.lo, self.hi)
        };
        Some(Eval {
            value: adjustment_factor(self.rho, rx, ry, rho_f),
            rx,
            ry,
            rho_f,
        })
    }

    fn axis(max: f64, n: usize, i: usize) -> f64 {
        max * (i as f64 / (n - 1) as f64)
    }

    fn rho_f_axis(&self) -> Vec<f64> {
        let n = self.grid_points;
        let m = (n - 1) as f64;
        (0..n)
            .map(|k| match k {
                0 => self.lo,
                k if k == n - 1 => self.hi,
                k => ((n - 1 - k) as f64 * self.lo + k as f64 * self.hi) / m,
            })
            .collect()
    }

    /// Exhaustive grid pass. Returns the best `(value, i, j)` for each sense,
    /// ties broken towards the smallest `(i, j)`.
    fn grid(&self) -> [(f64, usize, usize); 2] {
        let n = self.grid_points;
        let rho_fs = self.rho_f_axis();
        let rows: Vec<[(f64, usize, usize); 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let rx = Self::axis(self.rx_max, n, i);
                let d = 1.0 - rx * rx;
                let mut best = [
                    (f64::INFINITY, usize::MAX, 0),
                    (f64::NEG_INFINITY, usize::MAX, 0),
                ];
                for j in 0..n {
                    let ry = Self::axis(self.ry_max, n, j);
                    let Some((a, b)) =
                        rho_f_range(self.geometry, self.rho, rx, ry, self.lo, self.hi)
                    else {
                        continue;
                    };
                    let p = rx * ry;
                    for &rf in &rho_fs {
                        if rf < a || rf > b {
                            continue;
                        }
                        let v = (self.rho - p * rf) / d;
                        if v < best[0].0 {
                            best[0] = (v, i, j);
                        }
                        if v > best[1].0 {
                            best[1] = (v, i, j);
                        }
                    }
                }
                best
            })
            .collect();
        let mut best = [
            (f64::INFINITY, usize::MAX, 0),
            (f64::NEG_INFINITY, usize::MAX, 0),
        ];
        for row in rows {
            if row[0].0 < best[0].0 {
                best[0] = row[0];
            }
            if row[1].0 > best[1].0 {
                best[1] = row[1];
            }
        }
        best
    }

    /// Pattern search on one coordinate over `[0, max]`.
    fn search_1d(
        &self,
        sense: Sense,
        start: Eval,
        max: f64,
        h0: f64,
        coord: impl Fn(&Eval) -> f64,
        eval: impl Fn(f64, &Eval) -> Option<Eval>,
    ) -> (Eval, usize) {
        let mut best = start;
        let mut h = h0;
        let tol = max * 1e-15;
        let mut iterations = 0;
        while h > tol && iterations < self.max_iter {
            iterations += 1;
            let x = coord(&best);
            let mut moved = false;
            for cand in [(x + h).min(max), (x - h).max(0.0)] {
                if cand == x {
                    continue;
                }
                if let Some(e) = eval(cand, &best) {
                    if sense.better(e.value, best.value) {
                        best = e;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        (best, iterations)
    }

    /// Best `ry` for a fixed `rx`, starting the search at `ry0`.
    fn inner(&self, sense: Sense, rx: f64, ry0: f64, h0: f64) -> Option<Eval> {
        let start = self.profile(rx, ry0, sense).or_else(|| {
            // The previous ry is no longer admissible at this rx; restart from
            // the best admissible grid value.
            let n = self.grid_points;
            (0..n)
                .filter_map(|j| self.profile(rx, Self::axis(self.ry_max, n, j), sense))
                .reduce(|a, b| if sense.better(b.value, a.value) { b } else { a })
        })?;
        if self.ry_max == 0.0 {
            return Some(start);
        }
        let (best, _) = self.search_1d(
            sense,
            start,
            self.ry_max,
            h0,
            |e| e.ry,
            |ry, _| self.profile(rx, ry, sense),
        );
        Some(best)
    }

    fn refine(&self, sense: Sense, i: usize, j: usize) -> (Eval, usize) {
        let n = self.grid_points;
        let rx0 = Self::axis(self.rx_max, n, i);
        let ry0 = Self::axis(self.ry_max, n, j);
        let h_ry = self.ry_max / (n - 1) as f64;
        let start = self
            .inner(sense, rx0, ry0, h_ry)
            .expect("grid optimum is admissible");
        if self.rx_max == 0.0 {
            return (start, 0);
        }
        let h_rx = self.rx_max / (n - 1) as f64;
        self.search_1d(
            sense,
            start,
            self.rx_max,
            h_rx,
            |e| e.rx,
            |rx, current| self.inner(sense, rx, current.ry, h_ry),
        )
    }
}

/// The confounding interval for `stats` under `bounds`.
///
/// `rho_f_bounds` narrows the admissible correlation of the fitted vectors
/// (default `[-1, 1]`).
pub fn confounding_interval(
    stats: &SufficientStats,
    bounds: &BoundsSpec,
    rho_f_bounds: Option<[f64; 2]>,
    search: &SearchConfig,
) -> Result<ConfoundingInterval> {
    stats.validate()?;
    search.validate()?;
    let [lo, hi] = check_rho_f_bounds(rho_f_bounds)?;
    let t = transform_bounds(stats, bounds)?;
    let problem = Problem {
        rho: stats.rho_xy,
        rx_max: t.tbx.sqrt(),
        ry_max: t.tby.sqrt(),
        lo,
        hi,
        geometry: search.geometry,
        grid_points: search.grid_points,
        max_iter: search.max_refine_iterations,
    };
    let [(_, li, lj), (_, ui, uj)] = problem.grid();
    let (low, low_iter) = problem.refine(Sense::Min, li, lj);
    let (up, up_iter) = problem.refine(Sense::Max, ui, uj);
    Ok(assemble(
        stats,
        bounds,
        t,
        [lo, hi],
        search,
        low,
        up,
        [low_iter, up_iter],
    ))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    stats: &SufficientStats,
    bounds: &BoundsSpec,
    t: TransformedBounds,
    rho_f_bounds: [f64; 2],
    search: &SearchConfig,
    low: Eval,
    up: Eval,
    refine_iterations: [usize; 2],
) -> ConfoundingInterval {
    let lower_witness = AdjustmentPoint::new(low.rx, low.ry, low.rho_f);
    let upper_witness = AdjustmentPoint::new(up.rx, up.ry, up.rho_f);
    ConfoundingInterval {
        bx: bounds.bx,
        by: bounds.by,
        beta_xy_given_w: stats.beta_xy_given_w,
        lower: stats.sd_ratio * low.value,
        upper: stats.sd_ratio * up.value,
        lower_witness,
        upper_witness,
        method: MethodMeta {
            algorithm: Algorithm::GridRefine,
            geometry: search.geometry,
            rho_f_bounds,
            tbx: t.tbx,
            tby: t.tby,
            grid_points: search.grid_points,
            refine_iterations,
            samples: 0,
            feasible_samples: 0,
            lower_realizable: is_feasible(stats.rho_xy, &lower_witness, WITNESS_TOL),
            upper_realizable: is_feasible(stats.rho_xy, &upper_witness, WITNESS_TOL),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identify::beta_adjusted;

    fn wind() -> SufficientStats {
        SufficientStats::from_summary(1.62, -0.48, 0.14, 0.28).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn wind_a_box() {
        let ci = confounding_interval(
            &wind(),
            &BoundsSpec::new(0.60, 0.45),
            None,
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(rel(ci.lower, -2.93) < 0.02, "{}", ci.lower);
        assert!(rel(ci.upper, -0.44) < 0.02, "{}", ci.upper);
        assert!(ci.sign_identified());
        assert!(!ci.method.lower_realizable);
        assert!(ci.method.upper_realizable);
    }

    #[test]
    fn wind_a_realizable_is_sharper() {
        let cfg = SearchConfig::default().with_geometry(Geometry::Realizable);
        let ci = confounding_interval(&wind(), &BoundsSpec::new(0.60, 0.45), None, &cfg).unwrap();
        // Closed form: feasibility binds at rx^2 = tbx with rho_f = 1.
        let rx2: f64 = 0.46 / 0.86;
        let (a, b, c) = (1.0, 2.0 * 0.48 * rx2.sqrt(), 0.48 * 0.48 - (1.0 - rx2));
        let ry = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        let expected = 1.62 * (-0.48 - rx2.sqrt() * ry) / (1.0 - rx2);
        assert!(
            (ci.lower - expected).abs() < 1e-9,
            "{} vs {expected}",
            ci.lower
        );
        assert!(ci.method.lower_realizable && ci.method.upper_realizable);
    }

    #[test]
    fn measured_bounds_point_identify() {
        let s = wind();
        let ci = confounding_interval(
            &s,
            &BoundsSpec::measured(&s),
            None,
            &SearchConfig::default(),
        )
        .unwrap();
        assert_eq!(ci.lower, s.sd_ratio * s.rho_xy);
        assert_eq!(ci.upper, s.sd_ratio * s.rho_xy);
    }

    #[test]
    fn witnesses_reproduce_endpoints() {
        let s = SufficientStats::from_summary(92.75, -0.07, 0.05, 0.03).unwrap();
        let ci = confounding_interval(
            &s,
            &BoundsSpec::new(0.4, 0.4),
            None,
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(
            (beta_adjusted(&s, &ci.lower_witness).unwrap() - ci.lower).abs()
                <= 1e-9 * ci.lower.abs()
        );
        assert!(
            (beta_adjusted(&s, &ci.upper_witness).unwrap() - ci.upper).abs()
                <= 1e-9 * ci.upper.abs()
        );
    }

    #[test]
    fn rejects_bad_rho_f_bounds_and_grid() {
        let s = wind();
        let b = BoundsSpec::new(0.5, 0.5);
        assert!(confounding_interval(&s, &b, Some([0.5, 0.2]), &SearchConfig::default()).is_err());
        assert!(confounding_interval(&s, &b, Some([-1.5, 0.2]), &SearchConfig::default()).is_err());
        assert!(
            confounding_interval(&s, &b, None, &SearchConfig::default().with_grid_points(1))
                .is_err()
        );
    }

    #[test]
    fn infeasible_bounds_propagate() {
        let err = confounding_interval(
            &wind(),
            &BoundsSpec::new(0.1, 0.5),
            None,
            &SearchConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleBounds(_)));
    }
}
