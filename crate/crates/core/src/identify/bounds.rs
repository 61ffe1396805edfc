use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{partial_determination, SufficientStats};

/// Analyst-supplied upper bounds on R^2 of x and of y on {w, u}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsSpec {
    pub bx: f64,
    pub by: f64,
}

impl BoundsSpec {
    pub fn new(bx: f64, by: f64) -> Self {
        Self { bx, by }
    }

    /// The bounds that leave no room for u: the measured R^2 values.
    pub fn measured(stats: &SufficientStats) -> Self {
        Self::new(stats.r2_wx, stats.r2_wy)
    }
}

/// Bounds on the coefficients of partial determination of r(x;w) and
/// r(y;w) by r(u;w).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedBounds {
    pub tbx: f64,
    pub tby: f64,
}

/// Maps bounds on R^2_{w,u;.} to bounds on the partial R^2 of the residuals.
pub fn transform_bounds(stats: &SufficientStats, bounds: &BoundsSpec) -> Result<TransformedBounds> {
    let check = |name: &str, b: f64, measured: f64| -> Result<f64> {
        if !b.is_finite() {
            return Err(Error::InfeasibleBounds(format!(
                "{name} = {b} is not finite"
            )));
        }
        if b >= 1.0 {
            return Err(Error::InfeasibleBounds(format!(
                "{name} = {b} must be strictly below 1"
            )));
        }
        if b < measured {
            return Err(Error::InfeasibleBounds(format!(
                "{name} = {b} is below the measured R^2 = {measured}"
            )));
        }
        partial_determination(b, measured).map_err(|e| Error::InfeasibleBounds(e.to_string()))
    };
    Ok(TransformedBounds {
        tbx: check("bx", bounds.bx, stats.r2_wx)?,
        tby: check("by", bounds.by, stats.r2_wy)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(r2x: f64, r2y: f64) -> SufficientStats {
        SufficientStats::from_summary(1.0, 0.1, r2x, r2y).unwrap()
    }

    #[test]
    fn smoking_bounds_round_to_printed_values() {
        let t = transform_bounds(&stats(0.05, 0.03), &BoundsSpec::new(0.4, 0.4)).unwrap();
        assert!((t.tbx - 0.35 / 0.95).abs() < 1e-15);
        assert_eq!((t.tbx * 100.0).round() / 100.0, 0.37);
        assert_eq!((t.tby * 100.0).round() / 100.0, 0.38);
    }

    #[test]
    fn wind_bounds() {
        let t = transform_bounds(&stats(0.14, 0.28), &BoundsSpec::new(0.60, 0.45)).unwrap();
        assert!((t.tbx - 0.534_883_720_930_232_5).abs() < 1e-12);
        assert!((t.tby - 0.236_111_111_111_111_1).abs() < 1e-12);
    }

    #[test]
    fn measured_bounds_map_to_zero() {
        let s = stats(0.2, 0.7);
        let t = transform_bounds(&s, &BoundsSpec::measured(&s)).unwrap();
        assert_eq!((t.tbx, t.tby), (0.0, 0.0));
    }

    #[test]
    fn bounds_below_measured_are_infeasible() {
        let err = transform_bounds(&stats(0.14, 0.28), &BoundsSpec::new(0.1, 0.5)).unwrap_err();
        match err {
            Error::InfeasibleBounds(msg) => assert!(msg.contains("0.14")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(transform_bounds(&stats(0.14, 0.28), &BoundsSpec::new(0.5, 1.0)).is_err());
    }
}
