//! Straight-line least squares.

use alloc::format;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    /// Zero for fits through the origin.
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// `1 - SS_res / SS_tot` with `SS_tot` about the (weighted) mean of `y`.
    pub r_squared: f64,
}

/// Fits `y = slope * x (+ intercept)`, optionally weighted.
pub fn weighted_linear_fit(
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    through_origin: bool,
) -> Result<LinearFit> {
    let n = x.len();
    if y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::InvalidInput(
            "x, y and weights differ in length".into(),
        ));
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "linear fit needs at least 3 points, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in linear fit".into()));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::InvalidInput(
            "degenerate fit: all x values are equal".into(),
        ));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    if (0..n).any(|i| !(w(i) > 0.0) || !w(i).is_finite()) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let sw: f64 = (0..n).map(w).sum();
    let ybar = (0..n).map(|i| w(i) * y[i]).sum::<f64>() / sw;
    let dof = if through_origin { n - 1 } else { n - 2 } as f64;

    let (slope, intercept, slope_var_unit, intercept_var_unit) = if through_origin {
        let sxx: f64 = (0..n).map(|i| w(i) * x[i] * x[i]).sum();
        let sxy: f64 = (0..n).map(|i| w(i) * x[i] * y[i]).sum();
        (sxy / sxx, 0.0, 1.0 / sxx, 0.0)
    } else {
        let xbar = (0..n).map(|i| w(i) * x[i]).sum::<f64>() / sw;
        let sxx: f64 = (0..n).map(|i| w(i) * (x[i] - xbar) * (x[i] - xbar)).sum();
        let sxy: f64 = (0..n).map(|i| w(i) * (x[i] - xbar) * (y[i] - ybar)).sum();
        let slope = sxy / sxx;
        (
            slope,
            ybar - slope * xbar,
            1.0 / sxx,
            1.0 / sw + xbar * xbar / sxx,
        )
    };
    let ss_res: f64 = (0..n)
        .map(|i| {
            let r = y[i] - slope * x[i] - intercept;
            w(i) * r * r
        })
        .sum();
    let ss_tot: f64 = (0..n).map(|i| w(i) * (y[i] - ybar) * (y[i] - ybar)).sum();
    let s2 = ss_res / dof;
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: libm::sqrt(s2 * slope_var_unit),
        intercept_stderr: libm::sqrt(s2 * intercept_var_unit),
        r_squared,
    })
}
