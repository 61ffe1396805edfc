//! Brute-force reference for the interval search.
//!
//! Each coordinate of a sample is drawn as its lower bound with probability
//! 1/4, its upper bound with probability 1/4 and uniformly otherwise, so the
//! box faces, edges and corners (where extremes sit) get sampled densely.
//! Realizability is judged by [`is_feasible`] (eigenvalues of the Gram
//! matrix), not by the closed form the search uses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adjust::{is_feasible, AdjustmentPoint, Geometry, FEASIBILITY_TOL};
use super::bounds::{transform_bounds, BoundsSpec};
use super::search::{check_rho_f_bounds, Algorithm, ConfoundingInterval, MethodMeta, WITNESS_TOL};
use crate::error::{Error, Result};
use crate::regression::SufficientStats;

pub const MIN_ORACLE_SAMPLES: usize = 100_000;
const CHUNK: usize = 1 << 15;

#[inline]
fn coordinate(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    if u < 0.25 {
        lo
    } else if u < 0.5 {
        hi
    } else {
        lo + (hi - lo) * rng.gen::<f64>()
    }
}

#[derive(Clone, Copy)]
struct Extremes {
    min: (f64, AdjustmentPoint),
    max: (f64, AdjustmentPoint),
    feasible: usize,
}

impl Extremes {
    const EMPTY: Self = Self {
        min: (f64::INFINITY, AdjustmentPoint::NULL),
        max: (f64::NEG_INFINITY, AdjustmentPoint::NULL),
        feasible: 0,
    };

    fn merge(self, other: Self) -> Self {
        Self {
            min: if other.min.0 < self.min.0 {
                other.min
            } else {
                self.min
            },
            max: if other.max.0 > self.max.0 {
                other.max
            } else {
                self.max
            },
            feasible: self.feasible + other.feasible,
        }
    }
}

/// Sampling estimate of the confounding interval. Deterministic for a
/// given `seed`, independent of thread count.
pub fn interval_by_sampling_oracle(
    stats: &SufficientStats,
    bounds: &BoundsSpec,
    rho_f_bounds: Option<[f64; 2]>,
    geometry: Geometry,
    samples: usize,
    seed: u64,
) -> Result<ConfoundingInterval> {
    if samples < MIN_ORACLE_SAMPLES {
        return Err(Error::Input(format!(
            "oracle needs at least {MIN_ORACLE_SAMPLES} samples, got {samples}"
        )));
    }
    stats.validate()?;
    let [lo, hi] = check_rho_f_bounds(rho_f_bounds)?;
    let t = transform_bounds(stats, bounds)?;
    let (rx_max, ry_max) = (t.tbx.sqrt(), t.tby.sqrt());
    let rho = stats.rho_xy;

    let chunks = samples.div_ceil(CHUNK);
    let ext = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut ext = Extremes::EMPTY;
            for _ in 0..count {
                let point = AdjustmentPoint::new(
                    coordinate(&mut rng, 0.0, rx_max),
                    coordinate(&mut rng, 0.0, ry_max),
                    coordinate(&mut rng, lo, hi),
                );
                if geometry == Geometry::Realizable && !is_feasible(rho, &point, FEASIBILITY_TOL) {
                    continue;
                }
                ext.feasible += 1;
                let v = (rho - point.rx * point.ry * point.rho_f) / (1.0 - point.rx * point.rx);
                if v < ext.min.0 {
                    ext.min = (v, point);
                }
                if v > ext.max.0 {
                    ext.max = (v, point);
                }
            }
            ext
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Extremes::EMPTY, Extremes::merge);

    if ext.feasible == 0 {
        return Err(Error::OracleFailure { samples });
    }
    let (lower_witness, upper_witness) = (ext.min.1, ext.max.1);
    Ok(ConfoundingInterval {
        bx: bounds.bx,
        by: bounds.by,
        beta_xy_given_w: stats.beta_xy_given_w,
        lower: stats.sd_ratio * ext.min.0,
        upper: stats.sd_ratio * ext.max.0,
        lower_witness,
        upper_witness,
        method: MethodMeta {
            algorithm: Algorithm::Sampling,
            geometry,
            rho_f_bounds: [lo, hi],
            tbx: t.tbx,
            tby: t.tby,
            grid_points: 0,
            refine_iterations: [0, 0],
            samples,
            feasible_samples: ext.feasible,
            lower_realizable: is_feasible(rho, &lower_witness, WITNESS_TOL),
            upper_realizable: is_feasible(rho, &upper_witness, WITNESS_TOL),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let s = SufficientStats::from_summary(1.62, -0.48, 0.14, 0.28).unwrap();
        let b = BoundsSpec::new(0.25, 0.40);
        let a = interval_by_sampling_oracle(&s, &b, None, Geometry::Box, 100_000, 7).unwrap();
        let c = interval_by_sampling_oracle(&s, &b, None, Geometry::Box, 100_000, 7).unwrap();
        assert_eq!(a, c);
        assert!(((a.lower - -1.17) / 1.17).abs() < 0.03);
        assert!(((a.upper - -0.62) / 0.62).abs() < 0.03);
    }

    #[test]
    fn measured_bounds_are_degenerate() {
        let s = SufficientStats::from_summary(3.0, 0.2, 0.3, 0.1).unwrap();
        let ci = interval_by_sampling_oracle(
            &s,
            &BoundsSpec::measured(&s),
            None,
            Geometry::Realizable,
            100_000,
            1,
        )
        .unwrap();
        assert_eq!(ci.lower, s.sd_ratio * s.rho_xy);
        assert_eq!(ci.upper, s.sd_ratio * s.rho_xy);
    }

    #[test]
    fn too_few_samples_rejected() {
        let s = SufficientStats::from_summary(3.0, 0.2, 0.3, 0.1).unwrap();
        assert!(interval_by_sampling_oracle(
            &s,
            &BoundsSpec::new(0.5, 0.5),
            None,
            Geometry::Box,
            10,
            1
        )
        .is_err());
    }
}
