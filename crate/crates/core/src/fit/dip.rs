//! Lorentzian fit of a single transmission dip with a free baseline:
//!
//! ```text
//! T(w) = b * (1 - d / (1 + 4 (w - w0)^2 / fwhm^2))
//! ```
//!
//! The normalized on-resonance transmission is `t_min = 1 - d`.

use alloc::vec;
use alloc::vec::Vec;

use super::lm::{covariance, minimize, LeastSquaresProblem, LmOptions};
use crate::error::{Error, Result};
use crate::spectra::{find_dips_deeper_than, TransmissionTrace, DIP_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DipFitWarning {
    /// Residual signs cluster far more than noise allows: the lineshape or
    /// baseline model does not describe the data.
    ResidualStructure { runs_z: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipFit {
    pub omega0: f64,
    pub t_min: f64,
    pub fwhm: f64,
    pub baseline: f64,
    pub omega0_stderr: f64,
    pub t_min_stderr: f64,
    pub fwhm_stderr: f64,
    pub baseline_stderr: f64,
    pub residual_rms: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub warnings: Vec<DipFitWarning>,
}

/// Runs-test threshold below which residuals are called structured.
const RUNS_Z_LIMIT: f64 = -4.0;

struct Problem<'a> {
    /// Centered, scaled frequencies.
    x: Vec<f64>,
    y: &'a [f64],
}

impl Problem<'_> {
    fn model(p: &[f64], x: f64) -> f64 {
        let u = x - p[0];
        p[1] * (1.0 - p[2] / (1.0 + 4.0 * u * u / (p[3] * p[3])))
    }
}

impl LeastSquaresProblem for Problem<'_> {
    fn n_params(&self) -> usize {
        4
    }

    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &x), &y) in out.iter_mut().zip(&self.x).zip(self.y) {
            *o = Self::model(p, x) - y;
        }
    }

    fn jacobian(&self, p: &[f64], out: &mut [f64]) {
        let (x0, b, d, v) = (p[0], p[1], p[2], p[3]);
        for (i, &x) in self.x.iter().enumerate() {
            let u = x - x0;
            let den = 1.0 + 4.0 * u * u / (v * v);
            let row = &mut out[4 * i..4 * i + 4];
            row[0] = -b * d * 8.0 * u / (v * v * den * den);
            row[1] = 1.0 - d / den;
            row[2] = -b / den;
            row[3] = -b * d * 8.0 * u * u / (v * v * v * den * den);
        }
    }
}

/// White-noise level from the median absolute second difference, which is
/// insensitive to the smooth lineshape.
fn noise_sigma(t: &[f64]) -> f64 {
    let mut d: Vec<f64> = t
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs())
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, median, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    // second difference of white noise has variance 6 sigma^2
    *median / (0.674_489_75 * libm::sqrt(6.0))
}

/// Wald-Wolfowitz runs statistic of the residual signs.
fn runs_z(r: &[f64]) -> Option<f64> {
    let signs: Vec<bool> = r.iter().filter(|v| **v != 0.0).map(|v| *v > 0.0).collect();
    let n = signs.len() as f64;
    let pos = signs.iter().filter(|s| **s).count() as f64;
    let neg = n - pos;
    if pos < 2.0 || neg < 2.0 {
        return None;
    }
    let runs = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    let mean = 2.0 * pos * neg / n + 1.0;
    let var = 2.0 * pos * neg * (2.0 * pos * neg - n) / (n * n * (n - 1.0));
    Some((runs as f64 - mean) / libm::sqrt(var))
}

/// Fits the dip in `window` (sample index range) of `trace`.
pub fn fit_lorentzian_dip(
    trace: &TransmissionTrace,
    window: core::ops::Range<usize>,
    options: &LmOptions,
) -> Result<DipFit> {
    let sub = trace.window(window)?;
    let w = sub.omega();
    let t = sub.t_power();
    let n = w.len();
    if n < 8 {
        return Err(Error::InvalidInput(
            "dip window needs at least 8 samples".into(),
        ));
    }

    // baseline from the outer tenth on each side
    let edge = (n / 10).max(1);
    let mut edges: Vec<f64> = t[..edge].iter().chain(&t[n - edge..]).copied().collect();
    let mid = edges.len() / 2;
    let baseline0 = *edges.select_nth_unstable_by(mid, f64::total_cmp).1;
    if !(baseline0 > 0.0) {
        return Err(Error::InvalidInput(
            "window has no positive baseline".into(),
        ));
    }
    let normalized: Vec<f64> = t.iter().map(|v| v / baseline0).collect();
    let min_depth = (1.0 - DIP_THRESHOLD).max(6.0 * noise_sigma(&normalized));
    let dips = find_dips_deeper_than(
        &TransmissionTrace::new(w.to_vec(), normalized.clone())?,
        min_depth,
    );
    if dips.len() > 1 {
        return Err(Error::MultipleDips(dips.len()));
    }

    let center = 0.5 * (w[0] + w[n - 1]);
    let span = w[n - 1] - w[0];
    let x: Vec<f64> = w.iter().map(|v| (v - center) / span).collect();
    let i_min = normalized
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty window");
    let (x0, d0, v0) = match dips.first() {
        Some(dip) => (
            (dip.omega_center - center) / span,
            1.0 - dip.t_min,
            dip.fwhm / span,
        ),
        None => {
            let depth = 1.0 - normalized[i_min];
            let below = normalized
                .iter()
                .filter(|&&v| v < 1.0 - 0.5 * depth)
                .count();
            (x[i_min], depth, (below.max(2) as f64) / n as f64)
        }
    };
    let problem = Problem { x, y: t };
    let report = minimize(&problem, &[x0, baseline0, d0, v0], options)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.n_iterations,
        });
    }
    let p = &report.params;
    let floor = f64::EPSILON * baseline0;
    let cov = covariance(&problem, p, report.cost, floor).map_err(|k| {
        Error::RankDeficient(alloc::format!(
            "dip parameter {} is not determined by the window",
            ["omega0", "baseline", "depth", "fwhm"][k]
        ))
    })?;
    let se = |k: usize| libm::sqrt(cov[k * 4 + k]);

    let mut r = vec![0.0; n];
    problem.residuals(p, &mut r);
    let rms = libm::sqrt(r.iter().map(|v| v * v).sum::<f64>() / n as f64);
    let mut warnings = Vec::new();
    if rms > 1e-9 * p[1].abs() {
        if let Some(z) = runs_z(&r) {
            if z < RUNS_Z_LIMIT {
                warnings.push(DipFitWarning::ResidualStructure { runs_z: z });
            }
        }
    }

    Ok(DipFit {
        omega0: center + p[0] * span,
        t_min: 1.0 - p[2],
        fwhm: p[3].abs() * span,
        baseline: p[1],
        omega0_stderr: se(0) * span,
        t_min_stderr: se(2),
        fwhm_stderr: se(3) * span,
        baseline_stderr: se(1),
        residual_rms: rms,
        n_iterations: report.n_iterations,
        converged: true,
        warnings,
    })
}
