//! Least-squares machinery: centering, OLS by Householder QR, residualization,
//! coefficients of determination and the sufficient statistics that drive the
//! interval computation.
//!
//! Intercepts never enter a fit. Every column is centered first, which is
//! equivalent for slope coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{PrepareOptions, RawTable, Roles};

/// Relative cutoff below which a column is treated as linearly dependent on
/// the columns before it.
pub const COLLINEARITY_TOL: f64 = 1e-10;

/// Centered study data: outcome `y`, treatment `x` and covariates `w` (n x p).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    pub w: DMatrix<f64>,
    pub labels: Labels,
    pub units: Units,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub y: String,
    pub x: String,
    pub w: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub y: Option<String>,
    pub x: Option<String>,
}

impl Dataset {
    /// Builds a dataset from raw (uncentered) columns, centering them and
    /// checking the row-count and independence invariants.
    pub fn new(y: Vec<f64>, x: Vec<f64>, w: Vec<Vec<f64>>, labels: Labels) -> Result<Self> {
        let n = y.len();
        if x.len() != n || w.iter().any(|c| c.len() != n) {
            return Err(Error::Input("all columns must have the same length".into()));
        }
        let p = w.len();
        let mut wm = DMatrix::zeros(n, p);
        for (j, col) in w.iter().enumerate() {
            wm.set_column(j, &DVector::from_column_slice(col));
        }
        let data = Self {
            y: center(&DVector::from_vec(y)),
            x: center(&DVector::from_vec(x)),
            w: center_columns(&wm),
            labels,
            units: Units::default(),
        };
        data.validate()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    fn w_label(&self, j: usize) -> String {
        self.labels
            .w
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("w{}", j + 1))
    }

    fn validate(&self) -> Result<()> {
        let (n, p) = (self.n(), self.p());
        if n < p + 3 {
            return Err(Error::Degenerate(format!(
                "{n} rows is too few for {p} covariates (need at least {})",
                p + 3
            )));
        }
        // [x, w] must have full column rank.
        let mut xw = DMatrix::zeros(n, p + 1);
        xw.set_column(0, &self.x);
        for j in 0..p {
            xw.set_column(j + 1, &self.w.column(j));
        }
        let names: Vec<String> = std::iter::once(self.labels.x.clone())
            .chain((0..p).map(|j| self.w_label(j)))
            .collect();
        if let Some(j) = dependent_column(&xw) {
            return Err(Error::Collinear {
                column: names[j].clone(),
            });
        }
        let sv = xw.clone().svd(false, false).singular_values;
        let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
        if smax == 0.0 || smin <= COLLINEARITY_TOL * smax {
            return Err(Error::Collinear {
                column: names.last().cloned().unwrap_or_default(),
            });
        }
        Ok(())
    }
}

/// Rows dropped at each preparation step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepareReport {
    pub rows_read: usize,
    pub dropped_missing: usize,
    pub dropped_range: usize,
    pub dropped_outliers: usize,
    pub outlier_upper: Option<f64>,
    pub outlier_lower: Option<f64>,
    pub n: usize,
}

/// Turns a raw table into a centered [`Dataset`]: listwise deletion of
/// missing values, optional range filters, the optional IQR rule on the
/// treatment, then centering.
pub fn prepare_dataset(
    table: &RawTable,
    roles: &Roles,
    options: &PrepareOptions,
) -> Result<(Dataset, PrepareReport)> {
    let mut names: Vec<&str> = vec![&roles.y, &roles.x];
    names.extend(roles.w.iter().map(String::as_str));
    let mut report = PrepareReport {
        rows_read: table.rows.len(),
        ..Default::default()
    };

    let role_cols: Vec<Vec<Option<f64>>> = names
        .iter()
        .map(|name| table.numeric_column(name))
        .collect::<Result<_>>()?;
    let filter_cols: Vec<Vec<Option<f64>>> = options
        .filters
        .iter()
        .map(|f| table.numeric_column(&f.column))
        .collect::<Result<_>>()?;

    let mut keep: Vec<usize> = (0..table.rows.len())
        .filter(|&r| {
            role_cols.iter().all(|c| c[r].is_some()) && filter_cols.iter().all(|c| c[r].is_some())
        })
        .collect();
    report.dropped_missing = table.rows.len() - keep.len();

    let before = keep.len();
    keep.retain(|&r| {
        options
            .filters
            .iter()
            .zip(&filter_cols)
            .all(|(f, c)| c[r].is_some_and(|v| v >= f.min && v <= f.max))
    });
    report.dropped_range = before - keep.len();

    if let Some(rule) = options.outlier {
        if !(rule.multiplier.is_finite() && rule.multiplier >= 0.0) {
            return Err(Error::Input(format!(
                "outlier multiplier must be a non-negative number, got {}",
                rule.multiplier
            )));
        }
        let treatment: Vec<f64> = keep.iter().map(|&r| role_cols[1][r].unwrap()).collect();
        if !treatment.is_empty() {
            let (q1, q3) = quartiles(&treatment);
            let iqr = q3 - q1;
            let upper = q3 + rule.multiplier * iqr;
            let lower = rule.two_sided.then_some(q1 - rule.multiplier * iqr);
            report.outlier_upper = Some(upper);
            report.outlier_lower = lower;
            let before = keep.len();
            keep.retain(|&r| {
                let v = role_cols[1][r].unwrap();
                v <= upper && lower.is_none_or(|lo| v >= lo)
            });
            report.dropped_outliers = before - keep.len();
        }
    }

    let pick = |c: &Vec<Option<f64>>| -> Vec<f64> { keep.iter().map(|&r| c[r].unwrap()).collect() };
    report.n = keep.len();
    let labels = Labels {
        y: roles.y.clone(),
        x: roles.x.clone(),
        w: roles.w.clone(),
    };
    let mut data = Dataset::new(
        pick(&role_cols[0]),
        pick(&role_cols[1]),
        role_cols[2..].iter().map(pick).collect(),
        labels,
    )?;
    data.units = Units {
        y: roles.y_unit.clone(),
        x: roles.x_unit.clone(),
    };
    Ok((data, report))
}

/// First and third quartiles by linear interpolation between order
/// statistics (position `(n - 1) * p`, zero-based).
pub fn quartiles(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.75),
    )
}

fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn center(v: &DVector<f64>) -> DVector<f64> {
    if v.is_empty() {
        return v.clone();
    }
    let mean = v.mean();
    v.map(|e| e - mean)
}

pub fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = if col.is_empty() { 0.0 } else { col.mean() };
        col.apply(|e| *e -= mean);
    }
    out
}

/// A least-squares fit of a response on a set of regressor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    pub r_squared: f64,
}

/// Index of the first column whose component orthogonal to the preceding
/// columns is negligible, judged on the Householder `R` diagonal.
fn dependent_column(m: &DMatrix<f64>) -> Option<usize> {
    if m.ncols() == 0 {
        return None;
    }
    if m.nrows() < m.ncols() {
        return Some(m.nrows());
    }
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Some(0);
    }
    let r = m.clone().qr().r();
    (0..m.ncols()).find(|&j| r[(j, j)].abs() <= COLLINEARITY_TOL * scale)
}

/// Least-squares fit of `response` on the columns of `regressors` (no
/// intercept; pass centered data).
pub fn fit_ols(response: &DVector<f64>, regressors: &DMatrix<f64>) -> Result<OlsFit> {
    let n = response.len();
    if regressors.nrows() != n {
        return Err(Error::Input(format!(
            "response has {n} rows but regressors have {}",
            regressors.nrows()
        )));
    }
    let p = regressors.ncols();
    if p == 0 {
        return Ok(OlsFit {
            coefficients: DVector::zeros(0),
            fitted: DVector::zeros(n),
            residuals: response.clone(),
            r_squared: 0.0,
        });
    }
    if let Some(j) = dependent_column(regressors) {
        return Err(Error::Collinear {
            column: format!("regressor {}", j + 1),
        });
    }
    let qr = regressors.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.tr_mul(response);
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Collinear {
            column: "regressor".into(),
        })?;
    let fitted = &q * &qty;
    let residuals = response - &fitted;
    let total = response.norm_squared();
    let r_squared = if total > 0.0 {
        (fitted.norm_squared() / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(OlsFit {
        coefficients,
        fitted,
        residuals,
        r_squared,
    })
}

/// `column` minus its least-squares projection onto the span of `w`.
pub fn residualize(column: &DVector<f64>, w: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(fit_ols(column, w)?.residuals)
}

/// The four numbers the interval computation needs, plus the measured
/// adjusted slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StatsInput")]
pub struct SufficientStats {
    /// sigma(r(y;w)) / sigma(r(x;w)), in y-units per x-unit.
    pub sd_ratio: f64,
    /// Correlation of r(x;w) and r(y;w).
    pub rho_xy: f64,
    /// R^2 of x regressed on w.
    pub r2_wx: f64,
    /// R^2 of y regressed on w.
    pub r2_wy: f64,
    /// Slope of x in the regression of y on [x, w].
    pub beta_xy_given_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl SufficientStats {
    /// Stats from summary numbers alone (no raw data); the adjusted slope is
    /// `sd_ratio * rho_xy`.
    pub fn from_summary(sd_ratio: f64, rho_xy: f64, r2_wx: f64, r2_wy: f64) -> Result<Self> {
        let stats = Self {
            sd_ratio,
            rho_xy,
            r2_wx,
            r2_wy,
            beta_xy_given_w: sd_ratio * rho_xy,
            n: None,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.sd_ratio,
            self.rho_xy,
            self.r2_wx,
            self.r2_wy,
            self.beta_xy_given_w,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("sufficient statistics must be finite".into()));
        }
        if self.sd_ratio <= 0.0 {
            return Err(Error::Domain(format!(
                "sd_ratio must be positive, got {}",
                self.sd_ratio
            )));
        }
        if !(-1.0..=1.0).contains(&self.rho_xy) {
            return Err(Error::Domain(format!(
                "rho_xy must lie in [-1, 1], got {}",
                self.rho_xy
            )));
        }
        for (name, v) in [("r2_wx", self.r2_wx), ("r2_wy", self.r2_wy)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        let implied = self.sd_ratio * self.rho_xy;
        if (self.beta_xy_given_w - implied).abs() > 1e-9 * self.sd_ratio {
            return Err(Error::Domain(format!(
                "beta_xy_given_w = {} disagrees with sd_ratio * rho_xy = {implied}",
                self.beta_xy_given_w
            )));
        }
        Ok(())
    }
}

/// Wire form of [`SufficientStats`]: the adjusted slope may be omitted, and
/// whatever arrives is validated before use.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsInput {
    sd_ratio: f64,
    rho_xy: f64,
    r2_wx: f64,
    r2_wy: f64,
    #[serde(default)]
    beta_xy_given_w: Option<f64>,
    #[serde(default)]
    n: Option<usize>,
}

impl TryFrom<StatsInput> for SufficientStats {
    type Error = Error;

    fn try_from(v: StatsInput) -> Result<Self> {
        let stats = Self {
            sd_ratio: v.sd_ratio,
            rho_xy: v.rho_xy,
            r2_wx: v.r2_wx,
            r2_wy: v.r2_wy,
            beta_xy_given_w: v.beta_xy_given_w.unwrap_or(v.sd_ratio * v.rho_xy),
            n: v.n,
        };
        stats.validate()?;
        Ok(stats)
    }
}

/// Residualizes `y` and `x` on `w` and summarises the residual geometry.
pub fn sufficient_stats(data: &Dataset) -> Result<SufficientStats> {
    let fy = fit_ols(&data.y, &data.w)?;
    let fx = fit_ols(&data.x, &data.w)?;
    let (rx, ry) = (&fx.residuals, &fy.residuals);
    let (nx, ny) = (rx.norm(), ry.norm());
    if nx <= COLLINEARITY_TOL * data.x.norm() || nx == 0.0 {
        return Err(Error::Degenerate(format!(
            "treatment '{}' fully determined by w (zero residual variance)",
            data.labels.x
        )));
    }
    if ny <= COLLINEARITY_TOL * data.y.norm() || ny == 0.0 {
        return Err(Error::Degenerate(format!(
            "outcome '{}' fully determined by w (zero residual variance)",
            data.labels.y
        )));
    }
    let cross = rx.dot(ry);
    Ok(SufficientStats {
        sd_ratio: ny / nx,
        rho_xy: (cross / (nx * ny)).clamp(-1.0, 1.0),
        r2_wx: fx.r_squared,
        r2_wy: fy.r_squared,
        beta_xy_given_w: cross / (nx * nx),
        n: Some(data.n()),
    })
}

/// Coefficient of partial determination `(r2_wu - r2_w) / (1 - r2_w)`: the
/// share of the variation left unexplained by `w` that `u` explains.
pub fn partial_determination(r2_wu: f64, r2_w: f64) -> Result<f64> {
    if !(r2_w.is_finite() && r2_wu.is_finite()) || r2_w < 0.0 {
        return Err(Error::Domain(format!(
            "R^2 values must be finite and non-negative (got {r2_wu}, {r2_w})"
        )));
    }
    if r2_w >= 1.0 || r2_wu >= 1.0 {
        return Err(Error::Domain(format!(
            "R^2 values must be below 1 (got {r2_wu}, {r2_w})"
        )));
    }
    if r2_wu < r2_w {
        return Err(Error::Domain(format!(
            "R^2 with u ({r2_wu}) is below R^2 without u ({r2_w})"
        )));
    }
    Ok((r2_wu - r2_w) / (1.0 - r2_w))
}
