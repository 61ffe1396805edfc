use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::adjust::{feasibility_matrix, is_feasible, AdjustmentPoint};
use super::search::WITNESS_TOL;
use crate::error::{Error, Result};
use crate::regression::{fit_ols, SufficientStats};

/// Smallest sample size for which a witness can be built.
pub const MIN_WITNESS_ROWS: usize = 6;

/// Explicit vectors realizing an adjustment point: residual-like columns
/// for x and y, and the confounder columns u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: AdjustmentPoint,
    pub x_resid: Vec<f64>,
    pub y_resid: Vec<f64>,
    pub u_columns: Vec<Vec<f64>>,
    /// Set when the two fitted directions coincide (`|rho_f| = 1`) and a
    /// single u column is returned.
    pub rank_deficient: bool,
    /// Slope of x when y is regressed on `[x, u]`.
    pub achieved_beta: f64,
    /// R^2 of x regressed on u.
    pub achieved_r2x: f64,
    /// R^2 of y regressed on u.
    pub achieved_r2y: f64,
}

impl Witness {
    pub fn q(&self) -> usize {
        self.u_columns.len()
    }

    pub fn n(&self) -> usize {
        self.x_resid.len()
    }
}

/// Orthonormal, mean-zero columns built from the first two Fourier pairs.
fn centered_basis(n: usize) -> DMatrix<f64> {
    let scale = (2.0 / n as f64).sqrt();
    DMatrix::from_fn(n, 4, |t, k| {
        let freq = (k / 2 + 1) as f64;
        let angle = 2.0 * PI * freq * t as f64 / n as f64;
        scale * if k % 2 == 0 { angle.cos() } else { angle.sin() }
    })
}

/// Builds length-`n` vectors whose Gram matrix is the feasibility matrix of
/// `point`, with x scaled to unit standard deviation and y to `sd_ratio`.
/// u is spanned by the two fitted-direction vectors.
pub fn construct_witness(
    stats: &SufficientStats,
    point: &AdjustmentPoint,
    n: usize,
) -> Result<Witness> {
    if n < MIN_WITNESS_ROWS {
        return Err(Error::Input(format!(
            "witness needs at least {MIN_WITNESS_ROWS} rows, got {n}"
        )));
    }
    if point.rx >= 1.0 {
        return Err(Error::Domain(
            "treatment residual fully explained by u (rx = 1)".into(),
        ));
    }
    if !is_feasible(stats.rho_xy, point, WITNESS_TOL) {
        return Err(Error::InfeasiblePoint(format!(
            "no confounder realizes rx = {}, ry = {}, rho_f = {} with rho_xy = {}",
            point.rx, point.ry, point.rho_f, stats.rho_xy
        )));
    }

    let gram = feasibility_matrix(stats.rho_xy, point);
    let eig = gram.symmetric_eigen();
    let mut factor = eig.eigenvectors;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        factor.column_mut(k).scale_mut(s);
    }
    // Rows of `vectors` are the four unit-variance vectors.
    let basis = centered_basis(n);
    let norm = ((n - 1) as f64).sqrt();
    let column = |a: usize, sd: f64| -> DVector<f64> {
        let mut v = DVector::zeros(n);
        for k in 0..4 {
            v += basis.column(k) * factor[(a, k)];
        }
        v * (norm * sd)
    };
    let x = column(0, 1.0);
    let y = column(1, stats.sd_ratio);
    let rank_deficient = 1.0 - point.rho_f.abs() < 1e-12;
    let mut u_cols = vec![column(2, 1.0)];
    if !rank_deficient {
        u_cols.push(column(3, 1.0));
    }

    let q = u_cols.len();
    let mut u = DMatrix::zeros(n, q);
    for (j, c) in u_cols.iter().enumerate() {
        u.set_column(j, c);
    }
    let mut xu = DMatrix::zeros(n, q + 1);
    xu.set_column(0, &x);
    for j in 0..q {
        xu.set_column(j + 1, &u.column(j));
    }
    let achieved_beta = fit_ols(&y, &xu)?.coefficients[0];
    let achieved_r2x = fit_ols(&x, &u)?.r_squared;
    let achieved_r2y = fit_ols(&y, &u)?.r_squared;

    Ok(Witness {
        point: *point,
        x_resid: x.iter().copied().collect(),
        y_resid: y.iter().copied().collect(),
        u_columns: u_cols.iter().map(|c| c.iter().copied().collect()).collect(),
        rank_deficient,
        achieved_beta,
        achieved_r2x,
        achieved_r2y,
    })
}
