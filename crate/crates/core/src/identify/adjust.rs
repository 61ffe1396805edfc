//! The adjusted-slope formula and the realizability of its parameters.
//!
//! For unit-variance residuals r(x;w), r(y;w) and a confounder subspace U,
//! write x^ and y^ for their projections onto U. The slope of x after adding
//! r(u;w) to the model is
//!
//! ```text
//! beta = sd_ratio * (rho_xy - rx * ry * rho_f) / (1 - rx^2)
//! ```
//!
//! with `rx = |x^|`, `ry = |y^|` and `rho_f = corr(x^, y^)`.
//!
//! Not every `(rx, ry, rho_f)` is produced by an actual subspace. The Gram
//! matrix of `(x, y, x^/rx, y^/ry)` is
//!
//! ```text
//! | 1          rho_xy     rx         rx*rho_f |
//! | rho_xy     1          ry*rho_f   ry       |
//! | rx         ry*rho_f   1          rho_f    |
//! | rx*rho_f   ry         rho_f      1        |
//! ```
//!
//! (`corr(x, y^) = rx*rho_f` because `x - x^` is orthogonal to U). A point is
//! realizable exactly when this matrix is positive semidefinite, and then U
//! can be taken as the span of the two fitted vectors. Its Schur complement
//! reduces the condition to
//! `|rho_xy - rx*ry*rho_f| <= sqrt((1 - rx^2)(1 - ry^2))`, which the search
//! uses; [`is_feasible`] checks the eigenvalues directly.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::SufficientStats;

/// Eigenvalue tolerance for the realizability predicate.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// `(rx, ry, rho_f)`: the non-negative roots of the partial R^2 of r(x;w)
/// and r(y;w) on r(u;w), and the correlation of the two fitted vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentPoint {
    pub rx: f64,
    pub ry: f64,
    pub rho_f: f64,
}

impl AdjustmentPoint {
    pub const NULL: Self = Self {
        rx: 0.0,
        ry: 0.0,
        rho_f: 0.0,
    };

    pub fn new(rx: f64, ry: f64, rho_f: f64) -> Self {
        Self { rx, ry, rho_f }
    }
}

/// Which parameter points the interval search admits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Every point of the `rx^2 <= tbx`, `ry^2 <= tby`, `rho_f` box.
    #[default]
    Box,
    /// Only points realized by some confounder subspace.
    Realizable,
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Self::Box),
            "realizable" => Ok(Self::Realizable),
            other => Err(Error::Input(format!(
                "unknown geometry '{other}' (expected 'box' or 'realizable')"
            ))),
        }
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Box => "box",
            Self::Realizable => "realizable",
        })
    }
}

/// The dimensionless part of the adjusted slope.
#[inline]
pub(crate) fn adjustment_factor(rho: f64, rx: f64, ry: f64, rho_f: f64) -> f64 {
    (rho - rx * ry * rho_f) / (1.0 - rx * rx)
}

/// Slope of x after adjusting for a confounder with geometry `point`.
pub fn beta_adjusted(stats: &SufficientStats, point: &AdjustmentPoint) -> Result<f64> {
    if !(0.0..1.0).contains(&point.rx) {
        return Err(Error::Domain(if point.rx >= 1.0 {
            "treatment residual fully explained by u (rx = 1)".to_owned()
        } else {
            format!("rx must lie in [0, 1), got {}", point.rx)
        }));
    }
    Ok(stats.sd_ratio * adjustment_factor(stats.rho_xy, point.rx, point.ry, point.rho_f))
}

/// Gram matrix of `(r(x;w), r(y;w), x^/rx, y^/ry)` for a parameter point.
pub fn feasibility_matrix(rho_xy: f64, point: &AdjustmentPoint) -> Matrix4<f64> {
    let AdjustmentPoint { rx, ry, rho_f } = *point;
    Matrix4::new(
        1.0,
        rho_xy,
        rx,
        rx * rho_f,
        rho_xy,
        1.0,
        ry * rho_f,
        ry,
        rx,
        ry * rho_f,
        1.0,
        rho_f,
        rx * rho_f,
        ry,
        rho_f,
        1.0,
    )
}

/// True when the point is realized by some confounder: the Gram matrix is
/// positive semidefinite with smallest eigenvalue at least `-tol`.
pub fn is_feasible(rho_xy: f64, point: &AdjustmentPoint, tol: f64) -> bool {
    let in_range = (0.0..=1.0).contains(&point.rx)
        && (0.0..=1.0).contains(&point.ry)
        && (-1.0..=1.0).contains(&point.rho_f);
    if !in_range {
        return false;
    }
    let eig = feasibility_matrix(rho_xy, point).symmetric_eigenvalues();
    eig.min() >= -tol
}

/// Range of `rho_f` admitted at fixed `(rx, ry)`, intersected with
/// `[lo, hi]`; `None` when empty.
#[inline]
pub(crate) fn rho_f_range(
    geometry: Geometry,
    rho: f64,
    rx: f64,
    ry: f64,
    lo: f64,
    hi: f64,
) -> Option<(f64, f64)> {
    match geometry {
        Geometry::Box => Some((lo, hi)),
        Geometry::Realizable => {
            let slack = ((1.0 - rx * rx) * (1.0 - ry * ry)).max(0.0).sqrt();
            let p = rx * ry;
            if p > 0.0 {
                let a = lo.max((rho - slack) / p);
                let b = hi.min((rho + slack) / p);
                (a <= b).then_some((a, b))
            } else {
                (rho.abs() <= slack + FEASIBILITY_TOL).then_some((lo, hi))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_point_gives_measured_slope() {
        let s = SufficientStats::from_summary(1.62, -0.48, 0.14, 0.28).unwrap();
        let b = beta_adjusted(&s, &AdjustmentPoint::NULL).unwrap();
        assert_eq!(b, 1.62 * -0.48);
        assert_eq!((b * 100.0).round() / 100.0, -0.78);
    }

    #[test]
    fn zero_rho_f_removes_product_term() {
        let s = SufficientStats::from_summary(2.0, 0.3, 0.0, 0.0).unwrap();
        let b = beta_adjusted(&s, &AdjustmentPoint::new(0.6, 0.9, 0.0)).unwrap();
        assert!((b - 2.0 * 0.3 / (1.0 - 0.36)).abs() < 1e-15);
    }

    #[test]
    fn wind_upper_corner() {
        let s = SufficientStats::from_summary(1.62, -0.48, 0.14, 0.28).unwrap();
        let rx = (0.46f64 / 0.86).sqrt();
        let ry = (0.17f64 / 0.72).sqrt();
        let b = beta_adjusted(&s, &AdjustmentPoint::new(rx, ry, -1.0)).unwrap();
        assert!((b - -0.434_065_939_438).abs() < 1e-9);
        assert!(((b - -0.44) / 0.44).abs() < 0.02);
    }

    #[test]
    fn rx_one_is_singular() {
        let s = SufficientStats::from_summary(1.0, 0.1, 0.0, 0.0).unwrap();
        assert!(matches!(
            beta_adjusted(&s, &AdjustmentPoint::new(1.0, 0.2, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn contradiction_is_infeasible() {
        assert!(!is_feasible(
            0.0,
            &AdjustmentPoint::new(1.0, 1.0, 1.0),
            1e-10
        ));
    }

    #[test]
    fn null_confounder_always_feasible() {
        for &rho in &[-1.0, -0.3, 0.0, 0.99, 1.0] {
            for &rf in &[-1.0, 0.0, 0.7, 1.0] {
                assert!(is_feasible(rho, &AdjustmentPoint::new(0.0, 0.0, rf), 1e-10));
            }
        }
    }

    #[test]
    fn out_of_range_components_are_infeasible() {
        assert!(!is_feasible(
            0.0,
            &AdjustmentPoint::new(-0.1, 0.0, 0.0),
            1e-10
        ));
        assert!(!is_feasible(
            0.0,
            &AdjustmentPoint::new(0.1, 0.0, 1.5),
            1e-10
        ));
    }

    #[test]
    fn box_range_ignores_geometry() {
        assert_eq!(
            rho_f_range(Geometry::Box, 0.99, 0.9, 0.1, -1.0, 1.0),
            Some((-1.0, 1.0))
        );
        // x and y nearly collinear: u cannot explain most of x and little of y.
        assert_eq!(
            rho_f_range(Geometry::Realizable, 0.99, 0.9, 0.1, -1.0, 1.0),
            None
        );
    }
}
