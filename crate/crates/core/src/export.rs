//! JSON and CSV layouts for surfaces, regions and witnesses.
//!
//! Floats are written in shortest round-trip form, so reading an export back
//! reproduces the original values bit for bit.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::identify::Witness;
use crate::surface::{SurfaceGrid, ThresholdRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::UnsupportedFormat(s.to_owned())),
        }
    }
}

/// Pretty JSON with a trailing newline; the one renderer every front end uses.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn surface_to_string(grid: &SurfaceGrid, format: Format) -> String {
    match format {
        Format::Json => to_json(grid),
        Format::Csv => {
            let mut out = String::from("bx,by,L,U\n");
            for (i, bx) in grid.bx_axis.iter().enumerate() {
                for (j, by) in grid.by_axis.iter().enumerate() {
                    let _ = writeln!(out, "{bx},{by},{},{}", grid.lower[i][j], grid.upper[i][j]);
                }
            }
            out
        }
    }
}

pub fn region_to_string(region: &ThresholdRegion, format: Format) -> String {
    match format {
        Format::Json => to_json(region),
        Format::Csv => {
            let mut out = String::from("bx,by,in_region\n");
            for (i, bx) in region.bx_axis.iter().enumerate() {
                for (j, by) in region.by_axis.iter().enumerate() {
                    let _ = writeln!(out, "{bx},{by},{}", u8::from(region.mask[i][j]));
                }
            }
            out
        }
    }
}

pub fn surface_from_json(text: &str) -> Result<SurfaceGrid> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("surface JSON: {e}")))
}

pub fn region_from_json(text: &str) -> Result<ThresholdRegion> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("region JSON: {e}")))
}

/// Reads the `bx,by,L,U` layout back into a grid (without stats).
pub fn surface_from_csv(text: &str) -> Result<SurfaceGrid> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("surface CSV: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["bx", "by", "L", "U"] {
        return Err(Error::Input("surface CSV header must be bx,by,L,U".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Input(format!("surface CSV: {e}")))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| Error::Input(format!("surface CSV: bad number '{c}'")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 4 {
            return Err(Error::Input("surface CSV rows need 4 fields".into()));
        }
        rows.push([vals[0], vals[1], vals[2], vals[3]]);
    }
    let mut bx_axis: Vec<f64> = Vec::new();
    for r in &rows {
        if bx_axis.last() != Some(&r[0]) {
            bx_axis.push(r[0]);
        }
    }
    if bx_axis.is_empty() || rows.len() % bx_axis.len() != 0 {
        return Err(Error::Input(
            "surface CSV is not a full row-major grid".into(),
        ));
    }
    let ny = rows.len() / bx_axis.len();
    let by_axis: Vec<f64> = rows[..ny].iter().map(|r| r[1]).collect();
    let lower = rows
        .chunks(ny)
        .map(|c| c.iter().map(|r| r[2]).collect())
        .collect();
    let upper = rows
        .chunks(ny)
        .map(|c| c.iter().map(|r| r[3]).collect())
        .collect();
    Ok(SurfaceGrid {
        stats: None,
        bx_axis,
        by_axis,
        lower,
        upper,
    })
}

/// Witness vectors as CSV columns `x_resid,y_resid,u1[,u2]`.
pub fn witness_to_csv(w: &Witness) -> String {
    let mut out = String::from("x_resid,y_resid");
    for k in 0..w.q() {
        let _ = write!(out, ",u{}", k + 1);
    }
    out.push('\n');
    for t in 0..w.n() {
        let _ = write!(out, "{},{}", w.x_resid[t], w.y_resid[t]);
        for c in &w.u_columns {
            let _ = write!(out, ",{}", c[t]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{threshold_region, Direction};

    fn tiny() -> SurfaceGrid {
        SurfaceGrid {
            stats: None,
            bx_axis: vec![0.1, 0.5],
            by_axis: vec![0.2, 0.6],
            lower: vec![vec![-1.0, -1.5], vec![-2.0, -3.25]],
            upper: vec![vec![-1.0, -0.5], vec![-0.25, 0.1]],
        }
    }

    #[test]
    fn csv_layout() {
        let csv = surface_to_string(&tiny(), Format::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "bx,by,L,U");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "0.1,0.6,-1.5,-0.5");
    }

    #[test]
    fn region_json_fields() {
        let r = threshold_region(&tiny(), -0.4, Direction::Below).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&region_to_string(&r, Format::Json)).unwrap();
        assert_eq!(v["mask"], serde_json::json!([[true, true], [false, false]]));
        assert!(v["contour"].is_array());
        assert_eq!(v["direction"], "below");
    }

    #[test]
    fn unsupported_format() {
        assert_eq!(
            "xml".parse::<Format>(),
            Err(Error::UnsupportedFormat("xml".into()))
        );
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = SurfaceGrid {
            bx_axis: vec![0.1 + 0.2, 1.0 / 3.0],
            lower: vec![vec![-std::f64::consts::PI, 1e-300], vec![-2.0, 5e-324]],
            ..tiny()
        };
        let back = surface_from_csv(&surface_to_string(&g, Format::Csv)).unwrap();
        assert_eq!(back, g);
    }
}
