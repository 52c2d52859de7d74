//! Damped least squares (Levenberg-Marquardt).
//!
//! Minimizes `cost(x) = 0.5 * sum_i r_i(x)^2`. Each trial step solves
//! `(J^T J + lambda * diag(J^T J)) dx = -J^T r`. Accepted steps divide
//! `lambda` by 10, rejected steps multiply it by 10, so the cost never
//! increases between accepted iterates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, normal_equations};

pub trait LeastSquaresProblem {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    /// Row-major `n_residuals x n_params`.
    fn jacobian(&self, params: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this
    /// fraction.
    pub ftol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-10,
            initial_lambda: 1e-3,
        }
    }
}

/// Beyond this damping no step can lower the cost: the iterate is a
/// minimum to working precision.
const LAMBDA_CEILING: f64 = 1e16;

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub cost: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Cost of every accepted iterate, starting with the initial guess.
    pub cost_history: Vec<f64>,
}

fn half_sum_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

pub fn minimize<P: LeastSquaresProblem>(
    problem: &P,
    initial: &[f64],
    options: &LmOptions,
) -> Result<LmReport> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    if initial.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial guess has {} parameters, problem has {n}",
            initial.len()
        )));
    }
    if m < n {
        return Err(Error::InvalidInput(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    let mut x = initial.to_vec();
    let mut r = vec![0.0; m];
    let mut jac = vec![0.0; m * n];
    problem.residuals(&x, &mut r);
    let mut cost = half_sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::InvalidInput(
            "non-finite residuals at the initial guess".into(),
        ));
    }
    let mut history = vec![cost];
    let mut lambda = options.initial_lambda;
    let mut converged = n == 0 || cost == 0.0;
    let mut iterations = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];
    let mut fresh_jacobian = true;
    let (mut jtj, mut jtr) = (Vec::new(), Vec::new());

    while !converged && iterations < options.max_iterations {
        iterations += 1;
        if fresh_jacobian {
            problem.jacobian(&x, &mut jac);
            (jtj, jtr) = normal_equations(&jac, &r, m, n);
            fresh_jacobian = false;
        }
        let mut damped = jtj.clone();
        for i in 0..n {
            let d = jtj[i * n + i];
            damped[i * n + i] = d + lambda * if d > 0.0 { d } else { 1.0 };
        }
        let step = match cholesky(&damped, n) {
            Ok(l) => {
                let neg: Vec<f64> = jtr.iter().map(|g| -g).collect();
                cholesky_solve(&l, n, &neg)
            }
            Err(_) => {
                lambda *= 10.0;
                if lambda > LAMBDA_CEILING {
                    converged = true;
                }
                continue;
            }
        };
        for i in 0..n {
            trial[i] = x[i] + step[i];
        }
        problem.residuals(&trial, &mut r_trial);
        let new_cost = half_sum_sq(&r_trial);
        if new_cost.is_finite() && new_cost < cost {
            let rel = (cost - new_cost) / cost;
            core::mem::swap(&mut x, &mut trial);
            core::mem::swap(&mut r, &mut r_trial);
            cost = new_cost;
            history.push(cost);
            lambda = (lambda / 10.0).max(1e-15);
            fresh_jacobian = true;
            if rel < options.ftol || cost == 0.0 {
                converged = true;
            }
        } else {
            lambda *= 10.0;
            if lambda > LAMBDA_CEILING {
                converged = true;
            }
        }
    }

    Ok(LmReport {
        params: x,
        cost,
        n_iterations: iterations,
        converged,
        cost_history: history,
    })
}

/// Parameter covariance `s^2 (J^T J)^-1` at `params`, with
/// `s^2 = 2 cost / (m - n)`. `noise_floor` bounds `s` from below so that an
/// exact fit still reports a positive (rounding-level) uncertainty.
///
/// Fails with the index of the first parameter the data cannot determine.
pub fn covariance<P: LeastSquaresProblem>(
    problem: &P,
    params: &[f64],
    cost: f64,
    noise_floor: f64,
) -> core::result::Result<Vec<f64>, usize> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    let mut jac = vec![0.0; m * n];
    problem.jacobian(params, &mut jac);
    let r = vec![0.0; m];
    let (jtj, _) = normal_equations(&jac, &r, m, n);
    // Work with the correlation-scaled matrix so the rank test is
    // independent of parameter units.
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = jtj[i * n + i];
            if d > 0.0 {
                1.0 / libm::sqrt(d)
            } else {
                0.0
            }
        })
        .collect();
    if let Some(i) = scale.iter().position(|&s| s == 0.0) {
        return Err(i);
    }
    let mut corr = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            corr[i * n + j] = jtj[i * n + j] * scale[i] * scale[j];
        }
    }
    let l = cholesky(&corr, n)?;
    for i in 0..n {
        // pivot^2 is the fraction of column i not explained by earlier ones
        if l[i * n + i] * l[i * n + i] < 1e-12 {
            return Err(i);
        }
    }
    let inv = cholesky_inverse(&l, n);
    let dof = (m - n).max(1) as f64;
    let s2 = (2.0 * cost / dof).max(noise_floor * noise_floor);
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] = s2 * inv[i * n + j] * scale[i] * scale[j];
        }
    }
    Ok(cov)
}
