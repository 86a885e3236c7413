//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use lso_core::fields::GaussianFieldModel;
use lso_core::lattice::Site;
use nalgebra::DMatrix;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        m.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = m[(col, col)];
        for k in 0..n {
            m[(col, k)] /= p;
            inv[(col, k)] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[(r, col)];
                if f != 0.0 {
                    for k in 0..n {
                        m[(r, k)] -= f * m[(col, k)];
                        inv[(r, k)] -= f * inv[(col, k)];
                    }
                }
            }
        }
    }
    inv
}

/// `C_tt - C_tR C_RR^{-1} C_Rt` by explicit Schur complement.
pub fn schur_variance(model: &GaussianFieldModel, target: &Site, given: &[Site]) -> f64 {
    let c_tt = model.gamma(target, target);
    if given.is_empty() {
        return c_tt;
    }
    let n = given.len();
    let c_rr = DMatrix::from_fn(n, n, |i, j| model.gamma(&given[i], &given[j]));
    let inv = gauss_jordan_inverse(&c_rr);
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += model.gamma(target, &given[i]) * inv[(i, j)] * model.gamma(&given[j], target);
        }
    }
    c_tt - q
}

/// Composite Simpson rule with an even number of panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Kolmogorov-Smirnov distance of a sample from U(0, 1).
pub fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

/// Free Dirichlet chain levels `2 cos(k pi / (n + 1))`, ascending.
pub fn free_chain_levels(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=n)
        .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
        .collect();
    v.sort_by(f64::total_cmp);
    v
}
