//! Small dense symmetric solves for the fitters. Matrices are row-major
//! `n x n` slices; `n` never exceeds a handful of parameters.

use alloc::vec;
use alloc::vec::Vec;

/// Cholesky factor `L` (lower, row-major) of a symmetric positive-definite
/// matrix. Returns the index of the first non-positive pivot on failure.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, usize> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err(i);
                }
                l[i * n + i] = libm::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the Cholesky factor.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub(crate) fn cholesky_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, n, &e);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    inv
}

/// `J^T J` and `J^T r` for a row-major `m x n` Jacobian.
pub(crate) fn normal_equations(jac: &[f64], r: &[f64], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jtj = vec![0.0; n * n];
    let mut jtr = vec![0.0; n];
    for row in 0..m {
        let jr = &jac[row * n..(row + 1) * n];
        for a in 0..n {
            jtr[a] += jr[a] * r[row];
            for b in 0..=a {
                jtj[a * n + b] += jr[a] * jr[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[b * n + a] = jtj[a * n + b];
        }
    }
    (jtj, jtr)
}
