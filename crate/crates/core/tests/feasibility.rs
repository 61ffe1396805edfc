mod common;

use common::{gram, min_principal_minor};
use confint_core::identify::FEASIBILITY_TOL;
use confint_core::{feasibility_matrix, is_feasible, AdjustmentPoint};
use proptest::prelude::*;

/// Coefficients of det(lambda I - m) by the Faddeev-LeVerrier recursion,
/// highest degree first.
fn char_poly(m: &[[f64; 4]; 4]) -> [f64; 5] {
    let mul = |a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]| {
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    let mut coef = [1.0, 0.0, 0.0, 0.0, 0.0];
    let mut mk = [[0.0; 4]; 4];
    for k in 1..=4 {
        let mut acc = mul(m, &mk);
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] += coef[k - 1];
        }
        mk = acc;
        let am = mul(m, &mk);
        let trace: f64 = (0..4).map(|i| am[i][i]).sum();
        coef[k] = -trace / k as f64;
    }
    coef
}

fn eval(c: &[f64; 5], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, k| acc * x + k)
}

/// Smallest real root, located by scanning and bisection; the Gram matrix
/// has all eigenvalues in [-1, 4].
fn smallest_root(c: &[f64; 5]) -> f64 {
    let steps = 20_000;
    let (lo, hi) = (-1.5, 4.5);
    let h = (hi - lo) / steps as f64;
    let mut a = lo;
    for _ in 0..steps {
        let b = a + h;
        if eval(c, a) == 0.0 {
            return a;
        }
        if eval(c, a).signum() != eval(c, b).signum() {
            let (mut l, mut r) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                if eval(c, l).signum() == eval(c, mid).signum() {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            return 0.5 * (l + r);
        }
        a = b;
    }
    panic!("no root found");
}

#[test]
fn spec_point_is_feasible_by_characteristic_polynomial() {
    let m = gram(0.9, 0.1, 0.1, -1.0);
    let lambda_min = smallest_root(&char_poly(&m));
    assert!(lambda_min >= -1e-12, "{lambda_min}");
    assert!(is_feasible(
        0.9,
        &AdjustmentPoint::new(0.1, 0.1, -1.0),
        FEASIBILITY_TOL
    ));
    let eig =
        feasibility_matrix(0.9, &AdjustmentPoint::new(0.1, 0.1, -1.0)).symmetric_eigenvalues();
    assert!((eig.min() - lambda_min).abs() < 1e-9);
}

#[test]
fn matrix_matches_written_layout() {
    let p = AdjustmentPoint::new(0.3, 0.6, -0.4);
    let m = feasibility_matrix(0.2, &p);
    let g = gram(0.2, 0.3, 0.6, -0.4);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(m[(i, j)], g[i][j]);
        }
    }
}

#[test]
fn contradiction_and_null_cases() {
    assert!(!is_feasible(
        0.0,
        &AdjustmentPoint::new(1.0, 1.0, 1.0),
        FEASIBILITY_TOL
    ));
    for rho in [-1.0, -0.3, 0.0, 0.99, 1.0] {
        for rho_f in [-1.0, 0.0, 0.5, 1.0] {
            assert!(is_feasible(
                rho,
                &AdjustmentPoint::new(0.0, 0.0, rho_f),
                FEASIBILITY_TOL
            ));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    /// Eigenvalue predicate, principal-minor test and the Schur inequality
    /// agree away from the boundary.
    #[test]
    fn three_characterizations_agree(
        rho in -1.0..=1.0f64,
        rx in 0.0..0.999f64,
        ry in 0.0..0.999f64,
        rho_f in -1.0..=1.0f64,
    ) {
        let margin = ((1.0 - rx * rx) * (1.0 - ry * ry)).sqrt() - (rho - rx * ry * rho_f).abs();
        prop_assume!(margin.abs() > 1e-6);
        let schur = margin >= 0.0;
        let minors = min_principal_minor(&gram(rho, rx, ry, rho_f)) >= -1e-12;
        let eig = is_feasible(rho, &AdjustmentPoint::new(rx, ry, rho_f), FEASIBILITY_TOL);
        prop_assert_eq!(eig, schur);
        prop_assert_eq!(minors, schur);
    }
}
