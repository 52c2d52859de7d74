//! Stochastic check of the analytic squeezing spectrum.
//!
//! Above threshold the pump is clamped, so the parametric gain on the
//! signal/idler amplitude quadratures equals the amplitude decay `Gamma/2`.
//! The intensity-difference quadrature `X` then relaxes at the full energy
//! rate `Gamma` and is driven by the external (bus) and internal vacuum
//! inputs:
//!
//! ```text
//! dX = -Gamma X dt + sqrt(kappa_eff) dW_ext + sqrt(Gamma - kappa_eff) dW_int
//! X_out = sqrt(kappa_eff) X - xi_ext
//! ```
//!
//! The output spectrum of this process is exactly the shot-noise-normalized
//! `1 - (kappa_eff/Gamma) / (1 + W^2/Gamma^2)`. Here it is integrated with
//! Euler-Maruyama and measured with a Welch periodogram, independently of
//! the closed form.
//!
//! Units: white noises have unit two-sided PSD, so a sampled `xi` has
//! variance `1/dt`. A spectrum of 1 is the shot-noise level.
//!
//! Seeding: trajectory `j` of a run with master seed `s` draws its external
//! noise from ChaCha8 stream `2j` and its internal noise (and stationary
//! initial state) from stream `2j + 1`, both keyed by `s`. Any subset of
//! trajectories can therefore be computed in any order, on any thread, with
//! identical results.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fft::Fft;
use crate::fit::linear::{weighted_linear_fit, LinearFit};

/// Largest allowed `dt * Gamma`.
pub const MAX_DT_GAMMA: f64 = 0.05;
/// Shortest allowed `duration * Gamma`.
pub const MIN_DURATION_GAMMA: f64 = 50.0;
/// Default step, `dt * Gamma`.
pub const DEFAULT_DT_GAMMA: f64 = 0.025;
/// Default Welch segment length, samples. With the default step this
/// resolves `Gamma / 16`.
pub const DEFAULT_SEGMENT_LEN: usize = 4096;
/// Default number of Welch segments per trajectory.
pub const DEFAULT_SEGMENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinRun {
    /// `Gamma = kappa_eff + gamma_eff = 1/tau_c`, rad/s.
    pub gamma_total: f64,
    pub kappa_eff: f64,
    /// s.
    pub dt: f64,
    /// s.
    pub duration: f64,
    pub n_trajectories: usize,
    pub seed: u64,
}

impl LangevinRun {
    pub fn new(
        gamma_total: f64,
        kappa_eff: f64,
        dt: f64,
        duration: f64,
        n_trajectories: usize,
        seed: u64,
    ) -> Result<Self> {
        let run = Self {
            gamma_total,
            kappa_eff,
            dt,
            duration,
            n_trajectories,
            seed,
        };
        run.validate()?;
        Ok(run)
    }

    /// Run with the default step and enough samples for
    /// [`DEFAULT_SEGMENTS`] half-overlapping segments of
    /// [`DEFAULT_SEGMENT_LEN`].
    pub fn with_defaults(
        gamma_total: f64,
        kappa_eff: f64,
        n_trajectories: usize,
        seed: u64,
    ) -> Result<Self> {
        let dt = DEFAULT_DT_GAMMA / gamma_total;
        let steps = (DEFAULT_SEGMENTS + 1) * DEFAULT_SEGMENT_LEN / 2;
        Self::new(
            gamma_total,
            kappa_eff,
            dt,
            steps as f64 * dt,
            n_trajectories,
            seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.gamma_total;
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::OutOfRange {
                name: "gamma_total",
                value: g,
                reason: "total decay rate must be positive",
            });
        }
        if !(self.kappa_eff >= 0.0 && self.kappa_eff <= g) {
            return Err(Error::OutOfRange {
                name: "kappa_eff",
                value: self.kappa_eff,
                reason: "must lie in [0, gamma_total]",
            });
        }
        if !(self.dt > 0.0 && self.dt * g <= MAX_DT_GAMMA * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange {
                name: "dt",
                value: self.dt,
                reason: "step must be positive and at most 0.05 / gamma_total",
            });
        }
        if !(self.duration * g >= MIN_DURATION_GAMMA * (1.0 - 1e-12)) {
            return Err(Error::OutOfRange {
                name: "duration",
                value: self.duration,
                reason: "duration must be at least 50 / gamma_total",
            });
        }
        if self.n_trajectories == 0 {
            return Err(Error::OutOfRange {
                name: "n_trajectories",
                value: 0.0,
                reason: "need at least one trajectory",
            });
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        libm::round(self.duration / self.dt) as usize
    }

    pub fn eta_c(&self) -> f64 {
        self.kappa_eff / self.gamma_total
    }
}

/// One trajectory: the intracavity quadrature and the detected output.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSeries {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Integrates trajectory `trajectory` of `run`.
///
/// The state starts from its stationary distribution. The output at step
/// `n` pairs the external kick of that step with the midpoint
/// `(X_n + X_{n+1})/2`; that pairing keeps the discrete-time output spectrum
/// within a few hundredths of a dB of the continuous one at the default
/// step.
pub fn simulate_difference_quadrature(
    run: &LangevinRun,
    trajectory: usize,
) -> Result<QuadratureSeries> {
    run.validate()?;
    let n = run.n_steps();
    let g = run.gamma_total;
    let dt = run.dt;
    let sk = libm::sqrt(run.kappa_eff);
    let si = libm::sqrt((g - run.kappa_eff).max(0.0));
    let sdt = libm::sqrt(dt);
    let decay = 1.0 - g * dt;
    let mut ext = stream(run.seed, 2 * trajectory as u64);
    let mut int = stream(run.seed, 2 * trajectory as u64 + 1);

    // stationary variance of the discrete recursion: g dt / (1 - decay^2)
    let var0 = g * dt / (1.0 - decay * decay);
    let z0: f64 = StandardNormal.sample(&mut int);
    let mut x = libm::sqrt(var0) * z0;

    let mut inner = Vec::with_capacity(n);
    let mut outer = Vec::with_capacity(n);
    for _ in 0..n {
        let ze: f64 = StandardNormal.sample(&mut ext);
        let zi: f64 = StandardNormal.sample(&mut int);
        let dw_ext = sdt * ze;
        let next = decay * x + sk * dw_ext + si * sdt * zi;
        inner.push(x);
        outer.push(sk * 0.5 * (x + next) - dw_ext / dt);
        x = next;
    }
    Ok(QuadratureSeries { inner, outer })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    /// Hz, from DC up to Nyquist.
    pub freq_grid: Vec<f64>,
    /// Shot-noise units.
    pub psd: Vec<f64>,
    pub n_segments: usize,
}

impl NoiseSpectrum {
    pub fn psd_db(&self) -> Vec<f64> {
        self.psd.iter().map(|&p| 10.0 * libm::log10(p)).collect()
    }
}

/// Welch accumulator: Hann window, 50 % overlap.
#[derive(Debug, Clone)]
pub struct Welch {
    fft: Fft,
    window: Vec<f64>,
    window_power: f64,
}

impl Welch {
    pub fn new(segment_len: usize) -> Result<Self> {
        if segment_len < 8 || !segment_len.is_power_of_two() {
            return Err(Error::InvalidInput(alloc::format!(
                "segment length {segment_len} must be a power of two >= 8"
            )));
        }
        // periodic Hann
        let window: Vec<f64> = (0..segment_len)
            .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / segment_len as f64))
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        Ok(Self {
            fft: Fft::new(segment_len),
            window,
            window_power,
        })
    }

    pub fn segment_len(&self) -> usize {
        self.fft.len()
    }

    pub fn n_bins(&self) -> usize {
        self.segment_len() / 2 + 1
    }

    pub fn segments_in(&self, len: usize) -> usize {
        let l = self.segment_len();
        if len < l {
            0
        } else {
            (len - l) / (l / 2) + 1
        }
    }

    /// Adds the periodogram of every segment of `series` into `acc` and
    /// returns the number of segments.
    pub fn accumulate(&self, series: &[f64], dt: f64, acc: &mut [f64]) -> usize {
        let l = self.segment_len();
        let count = self.segments_in(series.len());
        let norm = dt / self.window_power;
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for s in 0..count {
            let seg = &series[s * l / 2..s * l / 2 + l];
            for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex64::new(x * w, 0.0);
            }
            self.fft.forward(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += norm * b.norm_sqr();
            }
        }
        count
    }

    pub fn frequencies(&self, dt: f64) -> Vec<f64> {
        let l = self.segment_len() as f64;
        (0..self.n_bins()).map(|k| k as f64 / (l * dt)).collect()
    }

    /// Averaged spectrum of one series.
    pub fn spectrum(&self, series: &[f64], dt: f64) -> Result<NoiseSpectrum> {
        let mut acc = vec![0.0; self.n_bins()];
        let n = self.accumulate(series, dt, &mut acc);
        if n == 0 {
            return Err(Error::InvalidInput(alloc::format!(
                "series of {} samples is shorter than one segment of {}",
                series.len(),
                self.segment_len()
            )));
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        Ok(NoiseSpectrum {
            freq_grid: self.frequencies(dt),
            psd: acc,
            n_segments: n,
        })
    }
}

/// Welch spectrum of `series` split into `n_segments` half-overlapping
/// segments, using the longest power-of-two segment that fits.
pub fn output_psd(series: &[f64], dt: f64, n_segments: usize) -> Result<NoiseSpectrum> {
    if n_segments == 0 || !(dt > 0.0) {
        return Err(Error::InvalidInput(
            "need dt > 0 and at least one segment".into(),
        ));
    }
    // (n_segments + 1) * L / 2 <= len
    let max_len = 2 * series.len() / (n_segments + 1);
    if max_len < 8 {
        return Err(Error::InvalidInput(alloc::format!(
            "series too short: {} samples for {n_segments} segments",
            series.len()
        )));
    }
    let l = 1usize << (usize::BITS - 1 - max_len.leading_zeros());
    let welch = Welch::new(l)?;
    let mut acc = vec![0.0; welch.n_bins()];
    let l2 = l / 2;
    let used = &series[..(n_segments + 1) * l2];
    let n = welch.accumulate(used, dt, &mut acc);
    acc.iter_mut().for_each(|a| *a /= n as f64);
    Ok(NoiseSpectrum {
        freq_grid: welch.frequencies(dt),
        psd: acc,
        n_segments: n,
    })
}

/// Summed periodograms of one trajectory's output. Combine with
/// [`finish_average`].
pub fn trajectory_psd_sum(
    run: &LangevinRun,
    trajectory: usize,
    welch: &Welch,
) -> Result<(Vec<f64>, usize)> {
    let series = simulate_difference_quadrature(run, trajectory)?;
    let mut acc = vec![0.0; welch.n_bins()];
    let n = welch.accumulate(&series.outer, run.dt, &mut acc);
    Ok((acc, n))
}

/// Averages per-trajectory sums, reduced in trajectory order.
pub fn finish_average(
    run: &LangevinRun,
    welch: &Welch,
    sums: impl IntoIterator<Item = (Vec<f64>, usize)>,
) -> Result<NoiseSpectrum> {
    let mut total = vec![0.0; welch.n_bins()];
    let mut count = 0;
    for (acc, n) in sums {
        for (t, a) in total.iter_mut().zip(&acc) {
            *t += a;
        }
        count += n;
    }
    if count == 0 {
        return Err(Error::InvalidInput(
            "trajectories are shorter than one Welch segment".into(),
        ));
    }
    total.iter_mut().for_each(|t| *t /= count as f64);
    Ok(NoiseSpectrum {
        freq_grid: welch.frequencies(run.dt),
        psd: total,
        n_segments: count,
    })
}

/// Trajectory-averaged output spectrum, computed sequentially.
pub fn simulate_spectrum(run: &LangevinRun, segment_len: usize) -> Result<NoiseSpectrum> {
    let welch = Welch::new(segment_len)?;
    let sums = (0..run.n_trajectories)
        .map(|j| trajectory_psd_sum(run, j, &welch))
        .collect::<Result<Vec<_>>>()?;
    finish_average(run, &welch, sums)
}

/// Closed-form output spectrum on `freq_grid` (Hz).
pub fn analytic_psd(kappa_eff: f64, gamma_total: f64, freq_grid: &[f64]) -> Result<NoiseSpectrum> {
    if !(gamma_total > 0.0) || !(kappa_eff >= 0.0) || kappa_eff > gamma_total {
        return Err(Error::OutOfRange {
            name: "kappa_eff",
            value: kappa_eff,
            reason: "need 0 <= kappa_eff <= gamma_total and gamma_total > 0",
        });
    }
    let eta = kappa_eff / gamma_total;
    let psd = freq_grid
        .iter()
        .map(|&f| {
            let x = 2.0 * PI * f / gamma_total;
            1.0 - eta / (1.0 + x * x)
        })
        .collect();
    Ok(NoiseSpectrum {
        freq_grid: freq_grid.to_vec(),
        psd,
        n_segments: 0,
    })
}

/// Largest `|10 log10(sim / analytic)|` over bins with angular frequency at
/// most `max_omega_over_gamma * Gamma`.
pub fn max_db_deviation(
    sim: &NoiseSpectrum,
    kappa_eff: f64,
    gamma_total: f64,
    max_omega_over_gamma: f64,
) -> Result<f64> {
    let limit = max_omega_over_gamma * gamma_total / (2.0 * PI);
    let analytic = analytic_psd(kappa_eff, gamma_total, &sim.freq_grid)?;
    Ok(sim
        .freq_grid
        .iter()
        .zip(sim.psd.iter().zip(&analytic.psd))
        .filter(|(f, _)| **f <= limit * (1.0 + 1e-12))
        .map(|(_, (s, a))| (10.0 * libm::log10(s / a)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoiseParams {
    pub dt: f64,
    pub n_samples: usize,
    pub segment_len: usize,
    pub seed: u64,
}

impl Default for ShotNoiseParams {
    fn default() -> Self {
        Self {
            dt: 1e-9,
            n_samples: 1 << 18,
            segment_len: 1024,
            seed: 0,
        }
    }
}

/// Balanced detection of a coherent beam split 50:50: each arm carries
/// shot noise with PSD proportional to its power, and the difference
/// photocurrent is recorded. Returns `(power, mean PSD level)` per power.
///
/// Power `i` of the grid uses ChaCha8 streams `2i` and `2i + 1`.
pub fn shot_noise_calibration(powers: &[f64], params: &ShotNoiseParams) -> Result<Vec<(f64, f64)>> {
    if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidInput(
            "optical powers must be nonnegative".into(),
        ));
    }
    let welch = Welch::new(params.segment_len)?;
    let sdt = 1.0 / libm::sqrt(params.dt);
    powers
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut a = stream(params.seed, 2 * i as u64);
            let mut b = stream(params.seed, 2 * i as u64 + 1);
            let arm = libm::sqrt(0.5 * p);
            let series: Vec<f64> = (0..params.n_samples)
                .map(|_| {
                    let za: f64 = StandardNormal.sample(&mut a);
                    let zb: f64 = StandardNormal.sample(&mut b);
                    arm * sdt * (za - zb)
                })
                .collect();
            let spec = welch.spectrum(&series, params.dt)?;
            let level = spec.psd.iter().sum::<f64>() / spec.psd.len() as f64;
            Ok((p, level))
        })
        .collect()
}

/// Through-origin line through a calibration table.
pub fn calibration_fit(table: &[(f64, f64)]) -> Result<LinearFit> {
    let x: Vec<f64> = table.iter().map(|t| t.0).collect();
    let y: Vec<f64> = table.iter().map(|t| t.1).collect();
    weighted_linear_fit(&x, &y, None, true)
}
