//! Reference computations that share no code with the library.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Columns = Vec<Vec<f64>>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

/// Solves `a z = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot_row = a[col].clone();
        for row in col + 1..k {
            let f = a[row][col] / pivot_row[col];
            for (v, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut z = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * z[c]).sum();
        z[row] = (b[row] - s) / a[row][row];
    }
    z
}

/// Least-squares coefficients from the normal equations.
pub fn normal_equations(y: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    let gram = xs
        .iter()
        .map(|a| xs.iter().map(|b| dot(a, b)).collect())
        .collect();
    let rhs = xs.iter().map(|a| dot(a, y)).collect();
    solve(gram, rhs)
}

pub fn fitted(y: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    let beta = normal_equations(y, xs);
    (0..y.len())
        .map(|t| xs.iter().zip(&beta).map(|(c, b)| c[t] * b).sum())
        .collect()
}

pub fn resid(y: &[f64], xs: &[Vec<f64>]) -> Vec<f64> {
    if xs.is_empty() {
        return y.to_vec();
    }
    let f = fitted(y, xs);
    y.iter().zip(&f).map(|(a, b)| a - b).collect()
}

pub fn r_squared(y: &[f64], xs: &[Vec<f64>]) -> f64 {
    let f = fitted(y, xs);
    dot(&f, &f) / dot(y, y)
}

pub fn corr(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// `sum_k coef[k] * cols[k] + scale * noise`
pub fn mix(rng: &mut ChaCha8Rng, cols: &[&[f64]], scale: f64) -> Vec<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    let coefs: Vec<f64> = cols.iter().map(|_| rng.gen_range(-1.5..1.5)).collect();
    (0..n)
        .map(|t| cols.iter().zip(&coefs).map(|(c, k)| c[t] * k).sum::<f64>() + scale * normal(rng))
        .collect()
}

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != c)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * det(&minor)
            })
            .sum(),
    }
}

/// Smallest of the 15 nonempty principal minors of a 4x4 matrix; the matrix
/// is PSD iff this is nonnegative.
pub fn min_principal_minor(m: &[[f64; 4]; 4]) -> f64 {
    (1u32..16)
        .map(|mask| {
            let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            let sub: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| m[i][j]).collect())
                .collect();
            det(&sub)
        })
        .fold(f64::INFINITY, f64::min)
}

/// The structured Gram matrix, written out independently of the library.
pub fn gram(rho: f64, rx: f64, ry: f64, rho_f: f64) -> [[f64; 4]; 4] {
    [
        [1.0, rho, rx, rx * rho_f],
        [rho, 1.0, ry * rho_f, ry],
        [rx, ry * rho_f, 1.0, rho_f],
        [rx * rho_f, ry, rho_f, 1.0],
    ]
}
