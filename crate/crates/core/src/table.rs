//! Raw tabular input: CSV parsing, column roles and row filters.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cells that are read as missing values rather than parse errors.
const MISSING_TOKENS: &[&str] = &["", "NA", "na", "NaN", "nan", "null", "NULL", "."];

/// A header row plus string cells, exactly as read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    /// Reads a UTF-8, comma-separated table whose first row holds the headers.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Input(format!("cannot read CSV header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        if headers.is_empty() {
            return Err(Error::Input("CSV has no header row".into()));
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Input(format!("CSV row {}: {e}", i + 2)))?;
            rows.push(record.iter().map(str::to_owned).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_csv(text.as_bytes())
    }

    /// Builds a table from named numeric columns (used by tests and examples).
    pub fn from_columns(columns: &[(&str, &[f64])]) -> Self {
        let n = columns.first().map_or(0, |(_, c)| c.len());
        let headers = columns.iter().map(|(name, _)| (*name).to_owned()).collect();
        let rows = (0..n)
            .map(|i| columns.iter().map(|(_, c)| c[i].to_string()).collect())
            .collect();
        Self { headers, rows }
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    /// Parses one column, mapping missing tokens to `None`.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(row, cells)| {
                let cell = cells.get(idx).map(String::as_str).unwrap_or("");
                if MISSING_TOKENS.contains(&cell) {
                    return Ok(None);
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(Error::NonNumeric {
                        column: name.to_owned(),
                        row: row + 2,
                        value: cell.to_owned(),
                    }),
                }
            })
            .collect()
    }
}

/// Assignment of table columns to the outcome, treatment and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roles {
    pub y: String,
    pub x: String,
    #[serde(default)]
    pub w: Vec<String>,
    #[serde(default)]
    pub y_unit: Option<String>,
    #[serde(default)]
    pub x_unit: Option<String>,
}

/// IQR outlier rule on the treatment column.
///
/// Rows with treatment above `Q3 + multiplier * IQR` are dropped, and with
/// `two_sided` also those below `Q1 - multiplier * IQR`. Quartiles use linear
/// interpolation between order statistics (position `(n - 1) * p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRule {
    pub multiplier: f64,
    #[serde(default)]
    pub two_sided: bool,
}

impl OutlierRule {
    pub fn upper(multiplier: f64) -> Self {
        Self {
            multiplier,
            two_sided: false,
        }
    }
}

/// Keeps rows whose value in `column` lies in `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeFilter {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

impl std::str::FromStr for RangeFilter {
    type Err = Error;

    /// Parses `column:min:max`; either bound may be left empty.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.rsplitn(3, ':');
        let (max, min, column) = match (parts.next(), parts.next(), parts.next()) {
            (Some(max), Some(min), Some(column)) if !column.is_empty() => (max, min, column),
            _ => return Err(Error::Input(format!("filter '{s}' is not column:min:max"))),
        };
        let bound = |text: &str, default: f64| -> Result<f64> {
            if text.is_empty() {
                Ok(default)
            } else {
                text.parse()
                    .map_err(|_| Error::Input(format!("filter '{s}': bad bound '{text}'")))
            }
        };
        Ok(Self {
            column: column.to_owned(),
            min: bound(min, f64::NEG_INFINITY)?,
            max: bound(max, f64::INFINITY)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    #[serde(default)]
    pub outlier: Option<OutlierRule>,
    #[serde(default)]
    pub filters: Vec<RangeFilter>,
}
