//! Fits of supermode resonances against heater powers.
//!
//! Each observation is one branch frequency at heater powers `(p1, p2)`. The
//! model is the two-ring eigenfrequency pair with bare rings tuned linearly,
//! `omega_i(p) = omega_i0 - alpha_i * p_i`.
//!
//! The fit runs in centered, scaled units: frequencies relative to the mean
//! observed resonance, divided by a scale set from the data. That keeps
//! the normal equations well conditioned even though optical frequencies
//! are ~1e15 rad/s and the features of interest are ~1e8 rad/s.

use alloc::format;
use alloc::vec::Vec;

use super::linear::weighted_linear_fit;
use super::lm::{covariance, minimize, LeastSquaresProblem, LmOptions};
use super::{FitResult, ParamEstimate};
use crate::error::{Error, Result};
use crate::supermodes::Branch;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingRow {
    pub p1: f64,
    pub p2: f64,
    pub branch: Branch,
    /// rad/s.
    pub resonance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingDataset {
    rows: Vec<CrossingRow>,
}

impl CrossingDataset {
    pub fn new(rows: Vec<CrossingRow>) -> Result<Self> {
        if rows.len() < 6 {
            return Err(Error::InvalidInput(format!(
                "crossing fit needs at least 6 rows, got {}",
                rows.len()
            )));
        }
        for b in [Branch::Upper, Branch::Lower] {
            let count = rows.iter().filter(|r| r.branch == b).count();
            if count < 2 {
                return Err(Error::InvalidInput(format!(
                    "{count} rows on the {} branch; both branches need at least 2 \
                     rows or kappa_12 is not determined",
                    b.as_str()
                )));
            }
        }
        if rows
            .iter()
            .any(|r| !(r.p1.is_finite() && r.p2.is_finite() && r.resonance.is_finite()))
        {
            return Err(Error::InvalidInput(
                "non-finite value in crossing data".into(),
            ));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[CrossingRow] {
        &self.rows
    }
}

/// Model parameters, all in rad/s (alphas in rad/s per mW).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingParams {
    pub kappa_12: f64,
    pub omega1_0: f64,
    pub omega2_0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl CrossingParams {
    pub const NAMES: [&'static str; 5] = ["kappa_12", "omega1_0", "omega2_0", "alpha1", "alpha2"];

    fn to_array(self) -> [f64; 5] {
        [
            self.kappa_12,
            self.omega1_0,
            self.omega2_0,
            self.alpha1,
            self.alpha2,
        ]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self {
            kappa_12: a[0],
            omega1_0: a[1],
            omega2_0: a[2],
            alpha1: a[3],
            alpha2: a[4],
        }
    }

    /// Branch frequency predicted at heater powers `(p1, p2)`.
    pub fn predict(&self, branch: Branch, p1: f64, p2: f64) -> f64 {
        let w1 = self.omega1_0 - self.alpha1 * p1;
        let w2 = self.omega2_0 - self.alpha2 * p2;
        let mean = 0.5 * (w1 + w2);
        let r = libm::hypot(0.5 * (w1 - w2), self.kappa_12);
        match branch {
            Branch::Upper => mean + r,
            Branch::Lower => mean - r,
        }
    }
}

/// Which of the five parameters to hold at their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FixedParams {
    pub kappa_12: bool,
    pub omega1_0: bool,
    pub omega2_0: bool,
    pub alpha1: bool,
    pub alpha2: bool,
}

impl FixedParams {
    fn mask(self) -> [bool; 5] {
        [
            self.kappa_12,
            self.omega1_0,
            self.omega2_0,
            self.alpha1,
            self.alpha2,
        ]
    }

    /// Sets the flag for a parameter by name.
    pub fn fix(&mut self, name: &str) -> Result<()> {
        match name {
            "kappa_12" => self.kappa_12 = true,
            "omega1_0" => self.omega1_0 = true,
            "omega2_0" => self.omega2_0 = true,
            "alpha1" => self.alpha1 = true,
            "alpha2" => self.alpha2 = true,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown crossing parameter '{other}'"
                )))
            }
        }
        Ok(())
    }
}

struct Problem<'a> {
    rows: &'a [CrossingRow],
    /// Subtracted from every frequency.
    origin: f64,
    /// Divides every frequency.
    scale: f64,
    /// Full scaled parameter vector; free entries are overwritten.
    base: [f64; 5],
    free: Vec<usize>,
}

impl Problem<'_> {
    fn full(&self, x: &[f64]) -> [f64; 5] {
        let mut p = self.base;
        for (k, &i) in self.free.iter().enumerate() {
            p[i] = x[k];
        }
        p
    }

    fn observed(&self, row: &CrossingRow) -> f64 {
        (row.resonance - self.origin) / self.scale
    }
}

impl LeastSquaresProblem for Problem<'_> {
    fn n_params(&self) -> usize {
        self.free.len()
    }

    fn n_residuals(&self) -> usize {
        self.rows.len()
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        let p = CrossingParams::from_array(self.full(x));
        for (o, row) in out.iter_mut().zip(self.rows) {
            *o = p.predict(row.branch, row.p1, row.p2) - self.observed(row);
        }
    }

    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let p = self.full(x);
        let n = self.free.len();
        for (i, row) in self.rows.iter().enumerate() {
            let w1 = p[1] - p[3] * row.p1;
            let w2 = p[2] - p[4] * row.p2;
            let delta = 0.5 * (w1 - w2);
            let r = libm::hypot(delta, p[0]);
            let sign = match row.branch {
                Branch::Upper => 1.0,
                Branch::Lower => -1.0,
            };
            let d_w1 = 0.5 + sign * 0.5 * delta / r;
            let d_w2 = 0.5 - sign * 0.5 * delta / r;
            let full = [sign * p[0] / r, d_w1, d_w2, -row.p1 * d_w1, -row.p2 * d_w2];
            for (k, &j) in self.free.iter().enumerate() {
                out[i * n + k] = full[j];
            }
        }
    }
}

fn same_setting(a: &CrossingRow, b: &CrossingRow) -> bool {
    let tol = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-12);
    tol(a.p1, b.p1) && tol(a.p2, b.p2)
}

/// Starting point derived from the data.
///
/// Needs at least three heater settings observed on both branches. At each
/// such setting the branch sum equals `omega1 + omega2` and the branch
/// separation `D` obeys `D^2 = (omega1 - omega2)^2 + 4 kappa_12^2`.
/// Regressing the sums on `(p1, p2)` yields `omega1_0 + omega2_0` and both
/// tuning rates; regressing `D^2 - q^2` on `q = alpha2 p2 - alpha1 p1`
/// yields `omega1_0 - omega2_0`. `kappa_12` starts at half the smallest
/// observed separation.
pub fn auto_initial_guess(data: &CrossingDataset) -> Result<CrossingParams> {
    let rows = data.rows();
    let mut pairs = Vec::new();
    for u in rows.iter().filter(|r| r.branch == Branch::Upper) {
        if let Some(l) = rows
            .iter()
            .find(|l| l.branch == Branch::Lower && same_setting(u, l))
        {
            pairs.push((u.p1, u.p2, u.resonance, l.resonance));
        }
    }
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "automatic initial guess needs at least 3 heater settings observed on both \
             branches (found {}); supply an initial guess",
            pairs.len()
        )));
    }
    let origin = pairs.iter().map(|p| p.2 + p.3).sum::<f64>() / (2 * pairs.len()) as f64;
    let sums: Vec<f64> = pairs
        .iter()
        .map(|p| (p.2 - origin) + (p.3 - origin))
        .collect();

    // sum = c0 - alpha1 p1 - alpha2 p2 (relative to 2*origin)
    let (c0, alpha1, alpha2) = regress_sum(&pairs, &sums)?;

    let q: Vec<f64> = pairs.iter().map(|p| alpha2 * p.1 - alpha1 * p.0).collect();
    let y: Vec<f64> = pairs
        .iter()
        .zip(&q)
        .map(|(p, q)| {
            let d = p.2 - p.3;
            d * d - q * q
        })
        .collect();
    let diff = match weighted_linear_fit(&q, &y, None, false) {
        Ok(fit) => 0.5 * fit.slope,
        // all settings at one detuning: start symmetric
        Err(_) => 0.0,
    };
    let min_sep = pairs
        .iter()
        .map(|p| p.2 - p.3)
        .fold(f64::INFINITY, f64::min);
    if !(min_sep > 0.0) {
        return Err(Error::InvalidInput(
            "upper branch must lie above the lower branch at every heater setting".into(),
        ));
    }
    Ok(CrossingParams {
        kappa_12: 0.5 * min_sep,
        omega1_0: origin + 0.5 * (c0 + diff),
        omega2_0: origin + 0.5 * (c0 - diff),
        alpha1,
        alpha2,
    })
}

fn regress_sum(pairs: &[(f64, f64, f64, f64)], sums: &[f64]) -> Result<(f64, f64, f64)> {
    // normal equations for sum = c0 + b1 p1 + b2 p2
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for (p, &s) in pairs.iter().zip(sums) {
        let row = [1.0, p.0, p.1];
        for i in 0..3 {
            atb[i] += row[i] * s;
            for j in 0..3 {
                ata[i * 3 + j] += row[i] * row[j];
            }
        }
    }
    if let Ok(l) = crate::linalg::cholesky(&ata, 3) {
        let x = crate::linalg::cholesky_solve(&l, 3, &atb);
        let ok = (0..3).all(|i| l[i * 3 + i] * l[i * 3 + i] > 1e-12 * ata[i * 3 + i]);
        if ok {
            return Ok((x[0], -x[1], -x[2]));
        }
    }
    // p1 and p2 move together: assume identical heaters.
    let total: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
    let fit = weighted_linear_fit(&total, sums, None, false).map_err(|_| {
        Error::InvalidInput(
            "heater powers do not vary across paired settings; supply an initial guess".into(),
        )
    })?;
    Ok((fit.intercept, -fit.slope, -fit.slope))
}

/// Least-squares fit of the crossing model.
///
/// `initial` defaults to [`auto_initial_guess`]. Fixed parameters keep their
/// initial value and report a zero standard error.
pub fn fit_avoided_crossing(
    data: &CrossingDataset,
    initial: Option<CrossingParams>,
    fixed: FixedParams,
    options: &LmOptions,
) -> Result<FitResult> {
    let guess = match initial {
        Some(g) => g,
        None => auto_initial_guess(data)?,
    };
    let rows = data.rows();
    let origin = rows.iter().map(|r| r.resonance).sum::<f64>() / rows.len() as f64;
    let spread = rows
        .iter()
        .map(|r| (r.resonance - origin).abs())
        .fold(0.0, f64::max);
    let scale = if guess.kappa_12.abs() > 0.0 {
        guess.kappa_12.abs()
    } else if spread > 0.0 {
        spread
    } else {
        1.0
    };
    let g = guess.to_array();
    let base = [
        g[0] / scale,
        (g[1] - origin) / scale,
        (g[2] - origin) / scale,
        g[3] / scale,
        g[4] / scale,
    ];
    let mask = fixed.mask();
    let free: Vec<usize> = (0..5).filter(|&i| !mask[i]).collect();
    let problem = Problem {
        rows,
        origin,
        scale,
        base,
        free: free.clone(),
    };
    let x0: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    let report = minimize(&problem, &x0, options)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.n_iterations,
        });
    }
    // rounding floor of the observations in scaled units
    let max_abs = rows.iter().map(|r| r.resonance.abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * max_abs / scale;
    let cov = covariance(&problem, &report.params, report.cost, floor).map_err(|k| {
        Error::RankDeficient(format!(
            "the data do not determine {} (fix it or add data from both sides of the crossing)",
            CrossingParams::NAMES[free[k]]
        ))
    })?;

    let fitted = problem.full(&report.params);
    let mut values = [
        fitted[0].abs() * scale,
        fitted[1] * scale + origin,
        fitted[2] * scale + origin,
        fitted[3] * scale,
        fitted[4] * scale,
    ];
    if mask[1] {
        values[1] = guess.omega1_0;
    }
    if mask[2] {
        values[2] = guess.omega2_0;
    }
    let nfree = free.len();
    let params = (0..5)
        .map(|i| {
            let stderr = match free.iter().position(|&j| j == i) {
                Some(k) => libm::sqrt(cov[k * nfree + k]) * scale,
                None => 0.0,
            };
            ParamEstimate {
                name: CrossingParams::NAMES[i],
                value: values[i],
                stderr,
                fixed: mask[i],
            }
        })
        .collect();
    Ok(FitResult {
        params,
        residual_rms: libm::sqrt(2.0 * report.cost / rows.len() as f64) * scale,
        converged: true,
        n_iterations: report.n_iterations,
        cost_history: report.cost_history,
    })
}

impl FitResult {
    /// Crossing parameters from a crossing fit.
    pub fn crossing_params(&self) -> Option<CrossingParams> {
        let get = |name| self.get(name).map(|p| p.value);
        Some(CrossingParams {
            kappa_12: get("kappa_12")?,
            omega1_0: get("omega1_0")?,
            omega2_0: get("omega2_0")?,
            alpha1: get("alpha1")?,
            alpha2: get("alpha2")?,
        })
    }
}
