// SPDX-License-Identifier: Apache-2.0

//! Dense symmetric solves for least squares via the normal equations.

use alloc::vec;
use alloc::vec::Vec;

/// Relative ridge added to the diagonal when the Gram matrix is not
/// numerically positive definite.
pub(crate) const RIDGE: f64 = 1e-8;

/// In-place Cholesky factorisation of the row-major `n x n` matrix `a`
/// (lower triangle). Fails when a pivot is not clearly positive.
fn cholesky(a: &mut [f64], n: usize, floor: f64) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > floor) {
            return false;
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Solves `gram * x = rhs`. Returns the solution and whether the ridge
/// fallback was needed.
pub(crate) fn solve_normal(gram: &[f64], rhs: &[f64], n: usize) -> (Vec<f64>, bool) {
    if n == 0 {
        return (Vec::new(), false);
    }
    let scale = (0..n).map(|i| gram[i * n + i]).fold(0.0, f64::max).max(1.0);
    let floor = scale * 1e-11;
    let mut a = gram.to_vec();
    if cholesky(&mut a, n, floor) {
        return (cholesky_solve(&a, n, rhs), false);
    }
    let mut lambda = RIDGE * scale;
    loop {
        let mut a = gram.to_vec();
        for i in 0..n {
            a[i * n + i] += lambda;
        }
        if cholesky(&mut a, n, 0.0) {
            return (cholesky_solve(&a, n, rhs), true);
        }
        lambda *= 10.0;
    }
}
