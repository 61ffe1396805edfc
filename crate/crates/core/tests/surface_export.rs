use confint_core::export::{
    region_from_json, region_to_string, surface_from_csv, surface_from_json, surface_to_string,
    witness_to_csv, Format,
};
use confint_core::surface::AXIS_CAP;
use confint_core::{
    compute_surface, confounding_interval, construct_witness, threshold_region, BoundsSpec,
    Direction, SearchConfig, SufficientStats,
};

fn wind() -> SufficientStats {
    SufficientStats::from_summary(1.62, -0.48, 0.14, 0.28).unwrap()
}

#[test]
fn json_and_csv_round_trip_bit_for_bit() {
    let g = compute_surface(&wind(), 7, None, &SearchConfig::surface()).unwrap();
    let back = surface_from_json(&surface_to_string(&g, Format::Json)).unwrap();
    assert_eq!(back, g);
    let from_csv = surface_from_csv(&surface_to_string(&g, Format::Csv)).unwrap();
    assert_eq!(from_csv.bx_axis, g.bx_axis);
    assert_eq!(from_csv.by_axis, g.by_axis);
    assert_eq!(from_csv.lower, g.lower);
    assert_eq!(from_csv.upper, g.upper);

    let r = threshold_region(&g, -0.5, Direction::Below).unwrap();
    assert_eq!(
        region_from_json(&region_to_string(&r, Format::Json)).unwrap(),
        r
    );
}

#[test]
fn surface_cells_match_direct_intervals() {
    let g = compute_surface(&wind(), 5, None, &SearchConfig::surface()).unwrap();
    assert_eq!(*g.bx_axis.last().unwrap(), AXIS_CAP);
    for (i, &bx) in g.bx_axis.iter().enumerate() {
        for (j, &by) in g.by_axis.iter().enumerate() {
            let ci = confounding_interval(
                &wind(),
                &BoundsSpec::new(bx, by),
                None,
                &SearchConfig::default(),
            )
            .unwrap();
            assert!((ci.lower - g.lower[i][j]).abs() <= 1e-9 * ci.lower.abs().max(1.0));
            assert!((ci.upper - g.upper[i][j]).abs() <= 1e-9 * ci.upper.abs().max(1.0));
        }
    }
}

#[test]
fn region_cells_agree_with_interval_threshold() {
    let g = compute_surface(&wind(), 11, None, &SearchConfig::surface()).unwrap();
    for (beta_star, direction) in [
        (-0.1, Direction::Below),
        (-0.6, Direction::Below),
        (-2.0, Direction::Above),
    ] {
        let r = threshold_region(&g, beta_star, direction).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                let expect = match direction {
                    Direction::Below => g.upper[i][j] <= beta_star,
                    Direction::Above => g.lower[i][j] >= beta_star,
                };
                assert_eq!(r.contains((i, j)), expect);
            }
        }
    }
}

/// The U = beta* level set moves less as the grid is refined.
#[test]
fn contour_converges_under_refinement() {
    let beta_star = -0.3;
    // Middle column; the same bx on every odd resolution.
    let crossing = |res: usize| {
        let g = compute_surface(&wind(), res, None, &SearchConfig::surface()).unwrap();
        let r = threshold_region(&g, beta_star, Direction::Below).unwrap();
        let bx = g.bx_axis[res / 2];
        let by = r
            .contour
            .iter()
            .find(|p| p[0] == bx)
            .map(|p| p[1])
            .expect("contour crosses the middle column");
        (bx, by)
    };
    let (bx9, by9) = crossing(9);
    let (bx33, by33) = crossing(33);
    assert_eq!(bx9, bx33);

    // Exact crossing by bisection on the interval itself.
    let upper = |by: f64| {
        confounding_interval(
            &wind(),
            &BoundsSpec::new(bx9, by),
            None,
            &SearchConfig::default(),
        )
        .unwrap()
        .upper
    };
    let (mut lo, mut hi) = (0.28, AXIS_CAP);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if upper(mid) <= beta_star {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (e9, e33) = ((by9 - lo).abs(), (by33 - lo).abs());
    assert!(e33 < e9, "{e33} vs {e9}");
    assert!(e33 < 0.01, "{e33}");
}

#[test]
fn witness_csv_has_one_row_per_observation() {
    let s = wind();
    let ci = confounding_interval(
        &s,
        &BoundsSpec::new(0.60, 0.45),
        None,
        &SearchConfig::default(),
    )
    .unwrap();
    let w = construct_witness(&s, &ci.upper_witness, 20).unwrap();
    let csv = witness_to_csv(&w);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("x_resid,y_resid,u1"));
    assert_eq!(lines.count(), 20);
    assert!((w.achieved_beta - -0.44).abs() / 0.44 < 0.02);
}
