//! Bus-waveguide transmission of the driven double ring and extraction of
//! `eta_c` from resonance dips.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::device::ValidatedConfig;
use crate::error::{Error, Result};
use crate::supermodes::{self, Branch};

/// Numerical slack allowed above unit transmission.
pub const PASSIVITY_EPS: f64 = 1e-9;
/// Samples below this level are candidate dips.
pub const DIP_THRESHOLD: f64 = 0.99;
/// Dips closer than this many linewidths are treated as overlapping.
pub const OVERLAP_FWHM: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionTrace {
    omega_grid: Vec<f64>,
    t_power: Vec<f64>,
}

impl TransmissionTrace {
    pub fn new(omega_grid: Vec<f64>, t_power: Vec<f64>) -> Result<Self> {
        if omega_grid.is_empty() {
            return Err(Error::InvalidInput("empty transmission trace".into()));
        }
        if omega_grid.len() != t_power.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "trace has {} frequencies but {} transmission values",
                omega_grid.len(),
                t_power.len()
            )));
        }
        if omega_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        if omega_grid.iter().chain(&t_power).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "trace contains non-finite values".into(),
            ));
        }
        Ok(Self {
            omega_grid,
            t_power,
        })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega_grid
    }

    pub fn t_power(&self) -> &[f64] {
        &self.t_power
    }

    pub fn len(&self) -> usize {
        self.omega_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_grid.is_empty()
    }

    /// Sub-trace over `range` of sample indices.
    pub fn window(&self, range: core::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidInput(alloc::format!(
                "window {}..{} outside trace of {} samples",
                range.start,
                range.end,
                self.len()
            )));
        }
        Self::new(
            self.omega_grid[range.clone()].to_vec(),
            self.t_power[range].to_vec(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingRegime {
    Overcoupled,
    Undercoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipRegime {
    Overcoupled,
    Undercoupled,
    Indeterminate,
}

impl DipRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            DipRegime::Overcoupled => "overcoupled",
            DipRegime::Undercoupled => "undercoupled",
            DipRegime::Indeterminate => "indeterminate",
        }
    }
}

impl From<CouplingRegime> for DipRegime {
    fn from(r: CouplingRegime) -> Self {
        match r {
            CouplingRegime::Overcoupled => DipRegime::Overcoupled,
            CouplingRegime::Undercoupled => DipRegime::Undercoupled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionDip {
    pub omega_center: f64,
    pub t_min: f64,
    pub fwhm: f64,
    /// Stays `Indeterminate` until classified against the model, and for
    /// good when the dip overlaps a neighbour.
    pub regime: DipRegime,
    /// False when a neighbouring dip is within three linewidths.
    pub resolved: bool,
}

/// Power transmission for bare ring frequencies `omega1`, `omega2`, probed
/// at `omega`.
pub fn transmission_at(config: &ValidatedConfig, omega1: f64, omega2: f64, omega: f64) -> f64 {
    let k = config.coupling.kappa_ext;
    let k12 = config.coupling.kappa_12;
    let g1 = config.ring1.gamma_i;
    let g2 = config.ring2.gamma_i;
    let i = Complex64::i();
    let a11 = i * (omega - omega1) - 0.5 * (g1 + k);
    let a22 = i * (omega - omega2) - 0.5 * g2;
    let a12 = i * k12;
    let det = a11 * a22 - a12 * a12;
    // a1 = -sqrt(k) a22 / det, s_out = 1 - sqrt(k) a1
    let s_out = Complex64::new(1.0, 0.0) + k * a22 / det;
    s_out.norm_sqr()
}

/// Steady-state `|s_out / s_in|^2` at heater powers `heater = (p1, p2)`.
pub fn transmission(config: &ValidatedConfig, heater: (f64, f64), omega: f64) -> Result<f64> {
    let (w1, w2) = config.ring_frequencies(heater.0, heater.1)?;
    Ok(transmission_at(config, w1, w2, omega))
}

/// Samples [`transmission`] over `omega_grid`.
pub fn transmission_trace(
    config: &ValidatedConfig,
    heater: (f64, f64),
    omega_grid: Vec<f64>,
) -> Result<TransmissionTrace> {
    let (w1, w2) = config.ring_frequencies(heater.0, heater.1)?;
    let t = omega_grid
        .iter()
        .map(|&w| transmission_at(config, w1, w2, w))
        .collect();
    TransmissionTrace::new(omega_grid, t)
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let (x0, x2) = (x[0] - x[1], x[2] - x[1]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    // y = a u^2 + b u + c in u = x - x[1]
    let d = x0 * x2 * (x0 - x2);
    let a = (x2 * (y0 - y1) - x0 * (y2 - y1)) / d;
    let b = (x0 * x0 * (y2 - y1) - x2 * x2 * (y0 - y1)) / d;
    if !(a > 0.0) {
        return (x[1], y1);
    }
    let u = -b / (2.0 * a);
    let u = u.clamp(x0, x2);
    (x[1] + u, y1 + b * u + a * u * u)
}

/// Frequency at which the trace crosses `level`, between samples `j` and
/// `j + 1`, using inverse quadratic interpolation where the neighbourhood is
/// monotone.
fn crossing(omega: &[f64], t: &[f64], j: usize, level: f64, outward_left: bool) -> f64 {
    let linear = || {
        let (x0, x1, y0, y1) = (omega[j], omega[j + 1], t[j], t[j + 1]);
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    };
    let k = if outward_left {
        j.checked_sub(1)
    } else if j + 2 < omega.len() {
        Some(j + 2)
    } else {
        None
    };
    let Some(k) = k else { return linear() };
    let mut idx = [j, j + 1, k];
    idx.sort_unstable();
    let ys = [t[idx[0]], t[idx[1]], t[idx[2]]];
    let monotone = (ys[0] < ys[1] && ys[1] < ys[2]) || (ys[0] > ys[1] && ys[1] > ys[2]);
    if !monotone {
        return linear();
    }
    let origin = omega[j];
    let xs = [
        omega[idx[0]] - origin,
        omega[idx[1]] - origin,
        omega[idx[2]] - origin,
    ];
    let mut x = 0.0;
    for a in 0..3 {
        let mut w = 1.0;
        for b in 0..3 {
            if a != b {
                w *= (level - ys[b]) / (ys[a] - ys[b]);
            }
        }
        x += w * xs[a];
    }
    let x = origin + x;
    let (lo, hi) = (omega[j], omega[j + 1]);
    if x.is_finite() && x >= lo && x <= hi {
        x
    } else {
        linear()
    }
}

/// Locates resonance dips in a normalized trace.
///
/// A dip is a local minimum below [`DIP_THRESHOLD`] whose neighbourhood
/// rises to at least its half-depth level `(1 + t_min)/2`, and by at least
/// the minimum depth, on both sides before reaching a deeper sample. Center and depth are refined with a
/// three-point parabola and the linewidth is read off the half-depth
/// crossings.
pub fn find_dips(trace: &TransmissionTrace) -> Vec<TransmissionDip> {
    find_dips_deeper_than(trace, 1.0 - DIP_THRESHOLD)
}

/// [`find_dips`] with a custom minimum depth `1 - t`, for noisy traces.
pub fn find_dips_deeper_than(trace: &TransmissionTrace, min_depth: f64) -> Vec<TransmissionDip> {
    let threshold = 1.0 - min_depth;
    let w = trace.omega();
    let t = trace.t_power();
    let n = t.len();
    let mut dips = Vec::new();
    if n < 3 {
        return dips;
    }
    for i in 1..n - 1 {
        if !(t[i] < threshold && t[i] <= t[i - 1] && t[i] < t[i + 1]) {
            continue;
        }
        let (center, t_min) =
            parabola_vertex([w[i - 1], w[i], w[i + 1]], [t[i - 1], t[i], t[i + 1]]);
        let t_min = t_min.clamp(0.0, 1.0).min(t[i]);
        let level = 0.5 * (1.0 + t_min);

        let mut left = None;
        let mut j = i;
        while j > 0 {
            if t[j - 1] < t[i] {
                break;
            }
            if t[j - 1] >= level {
                left = Some(crossing(w, t, j - 1, level, true));
                break;
            }
            j -= 1;
        }
        let mut right = None;
        let mut j = i;
        while j + 1 < n {
            if t[j + 1] < t[i] {
                break;
            }
            if t[j + 1] >= level {
                right = Some(crossing(w, t, j, level, false));
                break;
            }
            j += 1;
        }
        let fwhm = match (left, right) {
            (Some(l), Some(r)) => r - l,
            _ => continue,
        };
        // both sides must rise by min_depth before any deeper sample
        let rise = |it: &mut dyn Iterator<Item = &f64>| {
            it.take_while(|&&v| v >= t[i]).fold(t[i], |a, &b| a.max(b)) - t[i]
        };
        if rise(&mut t[..i].iter().rev()) < min_depth || rise(&mut t[i + 1..].iter()) < min_depth {
            continue;
        }
        if !(fwhm > 0.0) {
            continue;
        }
        dips.push(TransmissionDip {
            omega_center: center,
            t_min,
            fwhm,
            regime: DipRegime::Indeterminate,
            resolved: true,
        });
    }
    for k in 1..dips.len() {
        let sep = dips[k].omega_center - dips[k - 1].omega_center;
        if sep < OVERLAP_FWHM * dips[k].fwhm.max(dips[k - 1].fwhm) {
            dips[k].resolved = false;
            dips[k - 1].resolved = false;
        }
    }
    dips
}

/// `(1 +- sqrt(t_min)) / 2`, `+` when overcoupled.
pub fn eta_c_from_tmin(t_min: f64, regime: CouplingRegime) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_min) {
        return Err(Error::OutOfRange {
            name: "t_min",
            value: t_min,
            reason: "on-resonance transmission must lie in [0, 1]",
        });
    }
    let r = libm::sqrt(t_min);
    Ok(match regime {
        CouplingRegime::Overcoupled => 0.5 * (1.0 + r),
        CouplingRegime::Undercoupled => 0.5 * (1.0 - r),
    })
}

/// Resolves the two-valued `eta_c` rule by comparing the model's external
/// and intrinsic rates of the supermode nearest to the dip. Exact critical
/// coupling counts as undercoupled.
pub fn classify_regime(
    config: &ValidatedConfig,
    heater: (f64, f64),
    dip: &TransmissionDip,
) -> Result<CouplingRegime> {
    let (w1, w2) = config.ring_frequencies(heater.0, heater.1)?;
    let nearest = [Branch::Upper, Branch::Lower]
        .into_iter()
        .map(|b| supermodes::solve_at(config, b, w1, w2))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| {
            (a.omega - dip.omega_center)
                .abs()
                .total_cmp(&(b.omega - dip.omega_center).abs())
        })
        .expect("two branches");
    if (nearest.omega - dip.omega_center).abs() > dip.fwhm {
        return Err(Error::NoBranchMatch {
            omega: dip.omega_center,
        });
    }
    Ok(regime_of(nearest.kappa_eff, nearest.gamma_eff))
}

pub fn regime_of(kappa_eff: f64, gamma_eff: f64) -> CouplingRegime {
    if kappa_eff > gamma_eff {
        CouplingRegime::Overcoupled
    } else {
        CouplingRegime::Undercoupled
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipReport {
    pub dip: TransmissionDip,
    /// `None` for overlapping dips or dips no branch explains.
    pub eta_c: Option<f64>,
}

/// Finds the dips of `trace`, classifies the resolved ones against the
/// model at `heater`, and converts their depth into `eta_c`.
pub fn analyze_trace(
    config: &ValidatedConfig,
    heater: (f64, f64),
    trace: &TransmissionTrace,
) -> Result<Vec<DipReport>> {
    // surface heater range errors before any per-dip work
    config.ring_frequencies(heater.0, heater.1)?;
    find_dips(trace)
        .into_iter()
        .map(|mut dip| {
            if !dip.resolved {
                return Ok(DipReport { dip, eta_c: None });
            }
            match classify_regime(config, heater, &dip) {
                Ok(regime) => {
                    dip.regime = regime.into();
                    let eta_c = eta_c_from_tmin(dip.t_min, regime)?;
                    Ok(DipReport {
                        dip,
                        eta_c: Some(eta_c),
                    })
                }
                Err(Error::NoBranchMatch { .. }) => Ok(DipReport { dip, eta_c: None }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
