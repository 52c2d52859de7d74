//! One function per subcommand. Each returns the CSV table and a summary.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use ringlab_core::device::ValidatedConfig;
use ringlab_core::fit::{
    auto_initial_guess, fit_avoided_crossing, fit_lorentzian_dip, CrossingDataset, CrossingParams,
    CrossingRow, DipFitWarning, FixedParams, LmOptions,
};
use ringlab_core::langevin::{
    analytic_psd, calibration_fit, finish_average, max_db_deviation, shot_noise_calibration,
    trajectory_psd_sum, LangevinRun, ShotNoiseParams, Welch, DEFAULT_DT_GAMMA,
};
use ringlab_core::spectra::{
    analyze_trace, eta_c_from_tmin, transmission_trace, CouplingRegime, TransmissionTrace,
};
use ringlab_core::squeezing::{squeezing_spectrum, squeezing_vs_coupling};
use ringlab_core::supermodes::{eta_c_vs_heater, solve, supermode_frequencies, supermode_vectors};
use ringlab_core::units::{hz_to_rad_s, mhz_to_rad_s, nm_to_rad_s, rad_s_to_mhz, rad_s_to_nm};
use ringlab_core::Branch;

use crate::cli::{write_file, Grid, HeaterSweep, Outcome, RegimeArg};
use crate::error::CliError;
use crate::table::{format_number, read_csv, Cell, Column, CsvError, OutputTable};

type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CsvError::io(path.display().to_string(), e).into())
}

fn min_max(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

pub fn validate(config: &ValidatedConfig) -> Result<Outcome> {
    let mut t = OutputTable::new(&["key", "value"]);
    let mut row = |k: &str, v: f64| t.push(vec![Cell::from(k), v.into()]);
    row("pump_omega_rad_s", config.pump_omega());
    for (name, ring) in [("ring1", &config.ring1), ("ring2", &config.ring2)] {
        row(&format!("{name}_radius_um"), ring.radius);
        row(&format!("{name}_omega0_rad_s"), ring.omega0);
        row(&format!("{name}_gamma_i_rad_s"), ring.gamma_i);
        row(&format!("{name}_alpha_rad_s_per_mw"), ring.heater.alpha);
        row(&format!("{name}_p_max_mw"), ring.heater.p_max);
    }
    row("kappa_ext_rad_s", config.coupling.kappa_ext);
    row("kappa_12_rad_s", config.coupling.kappa_12);
    row("eta_d", config.eta_d());
    let summary = format!(
        "config ok: {} detection stages, eta_d = {:.4}, kappa_12/2pi = {:.4} MHz",
        config.detection.stages.len(),
        config.eta_d(),
        rad_s_to_mhz(config.coupling.kappa_12)
    );
    Ok(Outcome::new(t, summary))
}

/// Both supermodes +- 2 kappa_12, sampled at 1/40 of the narrower line.
fn auto_probe_grid(config: &ValidatedConfig, heater: (f64, f64)) -> Result<Vec<f64>> {
    let upper = solve(config, Branch::Upper, heater.0, heater.1)?;
    let lower = solve(config, Branch::Lower, heater.0, heater.1)?;
    let linewidth = (1.0 / upper.tau_c).min(1.0 / lower.tau_c);
    let step = linewidth / 40.0;
    let k12 = config.coupling.kappa_12;
    let lo = lower.omega - 2.0 * k12;
    let n = ((upper.omega + 2.0 * k12 - lo) / step).ceil() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

pub fn transmission(
    config: &ValidatedConfig,
    heater: (f64, f64),
    detuning_mhz: Option<&Grid>,
    dips_path: Option<&Path>,
) -> Result<Outcome> {
    let grid = match detuning_mhz {
        Some(g) => {
            let pump = config.pump_omega();
            g.0.iter().map(|d| pump + mhz_to_rad_s(*d)).collect()
        }
        None => auto_probe_grid(config, heater)?,
    };
    let trace = transmission_trace(config, heater, grid)?;
    let mut t = OutputTable::new(&["omega_rad_s", "t_power"]);
    for (w, p) in trace.omega().iter().zip(trace.t_power()) {
        t.push(vec![(*w).into(), (*p).into()]);
    }
    let reports = analyze_trace(config, heater, &trace)?;
    if let Some(path) = dips_path {
        let mut d = OutputTable::new(&[
            "omega_center_rad_s",
            "t_min",
            "fwhm_rad_s",
            "regime",
            "eta_c",
        ]);
        for r in &reports {
            d.push(vec![
                r.dip.omega_center.into(),
                r.dip.t_min.into(),
                r.dip.fwhm.into(),
                r.dip.regime.as_str().into(),
                r.eta_c.unwrap_or(f64::NAN).into(),
            ]);
        }
        write_file(path, &d)?;
    }
    let dips: Vec<String> = reports
        .iter()
        .map(|r| match r.eta_c {
            Some(e) => format!("t_min {:.4} (eta_c {:.4})", r.dip.t_min, e),
            None => format!("t_min {:.4} (unresolved)", r.dip.t_min),
        })
        .collect();
    let summary = format!(
        "{} points, {} dips{}{}",
        trace.len(),
        reports.len(),
        if dips.is_empty() { "" } else { ": " },
        dips.join(", ")
    );
    Ok(Outcome::new(t, summary))
}

/// Pairs `p1` with `p2`: a single `p2` is broadcast, otherwise the grids
/// must have equal length.
fn paired(p1: &[f64], p2: &[f64]) -> Result<Vec<(f64, f64)>> {
    match p2 {
        [v] => Ok(p1.iter().map(|&a| (a, *v)).collect()),
        _ if p2.len() == p1.len() => Ok(p1.iter().copied().zip(p2.iter().copied()).collect()),
        _ => Err(CliError::usage(format!(
            "--p2 has {} values; give one value or as many as --p1 ({})",
            p2.len(),
            p1.len()
        ))),
    }
}

pub fn crossing_sweep(
    config: &ValidatedConfig,
    p1: &[f64],
    p2: &[f64],
    dataset: bool,
    noise_mhz: f64,
    seed: u64,
) -> Result<Outcome> {
    let points = paired(p1, p2)?;
    let k12 = config.coupling.kappa_12;
    let noise = Normal::new(0.0, mhz_to_rad_s(noise_mhz)).map_err(|_| {
        CliError::usage(format!(
            "--noise-mhz {noise_mhz} must be a nonnegative number"
        ))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = if dataset {
        OutputTable::new(&["p1_mw", "p2_mw", "branch", "resonance_rad_s"])
    } else {
        OutputTable::new(&[
            "p1_mw",
            "p2_mw",
            "omega_lower_rad_s",
            "omega_upper_rad_s",
            "frac1_lower",
            "frac1_upper",
        ])
    };
    let mut min_split = f64::INFINITY;
    for &(a, b) in &points {
        let (w1, w2) = config.ring_frequencies(a, b)?;
        let (plus, minus) = supermode_frequencies(w1, w2, k12)?;
        min_split = min_split.min(plus - minus);
        if dataset {
            for (branch, w) in [(Branch::Lower, minus), (Branch::Upper, plus)] {
                let w = if noise_mhz > 0.0 {
                    w + noise.sample(&mut rng)
                } else {
                    w
                };
                t.push(vec![a.into(), b.into(), branch.as_str().into(), w.into()]);
            }
        } else {
            let (f_lower, _) = supermode_vectors(w1, w2, k12, Branch::Lower)?;
            let (f_upper, _) = supermode_vectors(w1, w2, k12, Branch::Upper)?;
            t.push(vec![
                a.into(),
                b.into(),
                minus.into(),
                plus.into(),
                f_lower.into(),
                f_upper.into(),
            ]);
        }
    }
    let summary = format!(
        "{} heater settings, minimum splitting/2pi = {:.4} MHz",
        points.len(),
        rad_s_to_mhz(min_split)
    );
    Ok(Outcome::new(t, summary))
}

pub fn etac_sweep(config: &ValidatedConfig, sweep: &HeaterSweep) -> Result<Outcome> {
    let points = eta_c_vs_heater(config, sweep.branch, &sweep.p1.0, sweep.p2)?;
    let mut t = OutputTable::new(&["p1_mw", "omega_rad_s", "eta_c", "tau_c_s"]);
    for p in &points {
        t.push(vec![
            p.p1.into(),
            p.omega.into(),
            p.eta_c.into(),
            p.tau_c.into(),
        ]);
    }
    let (lo, hi) = min_max(points.iter().map(|p| p.eta_c));
    let (tlo, thi) = min_max(points.iter().map(|p| p.tau_c));
    let summary = format!(
        "{} branch, {} points: eta_c {:.4} .. {:.4}, tau_c {:.2} .. {:.2} ns",
        sweep.branch.as_str(),
        points.len(),
        lo,
        hi,
        tlo * 1e9,
        thi * 1e9
    );
    Ok(Outcome::new(t, summary))
}

pub fn squeeze_sweep(
    config: &ValidatedConfig,
    sweep: &HeaterSweep,
    sideband_mhz: f64,
) -> Result<Outcome> {
    let sideband_hz = sideband_mhz * 1e6;
    let rows = squeezing_vs_coupling(
        config,
        sweep.branch,
        &sweep.p1.0,
        sweep.p2,
        hz_to_rad_s(sideband_hz),
    )?;
    let mut t = OutputTable::new(&[
        "eta_c",
        "s_measured_db",
        "s_onchip_db",
        "omega_sideband_hz",
        "tau_c_s",
        "squeezing_measured_db",
        "squeezing_onchip_db",
    ]);
    for r in &rows {
        t.push(vec![
            r.eta_c.into(),
            r.s_measured_db.into(),
            r.s_onchip_db.into(),
            sideband_hz.into(),
            r.tau_c.into(),
            (-r.s_measured_db).into(),
            (-r.s_onchip_db).into(),
        ]);
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.s_measured_db.total_cmp(&b.s_measured_db));
    let summary = match best {
        Some(r) => format!(
            "{} points at {} MHz: best {:.2} dB measured ({:.2} dB on chip) at eta_c = {:.3}",
            rows.len(),
            sideband_mhz,
            -r.s_measured_db,
            -r.s_onchip_db,
            r.eta_c
        ),
        None => "no points".to_string(),
    };
    Ok(Outcome::new(t, summary))
}

pub fn squeeze_spectrum(eta_c: f64, eta_d: f64, tau_c: f64, freq_hz: &[f64]) -> Result<Outcome> {
    let omega: Vec<f64> = freq_hz.iter().map(|&f| hz_to_rad_s(f)).collect();
    let points = squeezing_spectrum(eta_c, eta_d, tau_c, &omega)?;
    let mut t = OutputTable::new(&["freq_hz", "s_linear", "s_db", "squeezing_db"]);
    for (f, p) in freq_hz.iter().zip(&points) {
        t.push(vec![
            (*f).into(),
            p.s_linear.into(),
            p.s_db.into(),
            (-p.s_db).into(),
        ]);
    }
    let summary = match points
        .iter()
        .zip(freq_hz)
        .min_by(|a, b| a.0.s_db.total_cmp(&b.0.s_db))
    {
        Some((p, f)) => format!(
            "{} points: lowest noise {:.3} dB at {} Hz (Omega tau_c = {:.4})",
            points.len(),
            p.s_db,
            f,
            hz_to_rad_s(*f) * tau_c
        ),
        None => "no points".to_string(),
    };
    Ok(Outcome::new(t, summary))
}

#[derive(Debug, Clone)]
pub struct LangevinArgs {
    pub seed: u64,
    pub trajectories: usize,
    pub branch: Branch,
    pub heater: (f64, f64),
    pub eta_c: Option<f64>,
    pub tau_c: Option<f64>,
    pub segment_len: usize,
    pub segments: usize,
    pub max_omega_gamma: f64,
    pub tolerance_db: f64,
}

pub fn langevin_verify(config: &ValidatedConfig, args: &LangevinArgs) -> Result<Outcome> {
    let (eta_c, tau_c) = match (args.eta_c, args.tau_c) {
        (Some(e), Some(t)) => (e, t),
        (e, t) => {
            let s = solve(config, args.branch, args.heater.0, args.heater.1)?;
            (e.unwrap_or(s.eta_c), t.unwrap_or(s.tau_c))
        }
    };
    if !(eta_c > 0.0 && eta_c <= 1.0) {
        return Err(CliError::usage(format!(
            "eta_c = {eta_c} must lie in (0, 1]"
        )));
    }
    if !(tau_c > 0.0 && tau_c.is_finite()) {
        return Err(CliError::usage(format!("tau_c = {tau_c} must be positive")));
    }
    if args.segment_len < 8 || !args.segment_len.is_power_of_two() {
        return Err(CliError::usage(format!(
            "--segment-len {} must be a power of two >= 8",
            args.segment_len
        )));
    }
    if args.segments == 0 {
        return Err(CliError::usage("--segments must be at least 1"));
    }
    let gamma = 1.0 / tau_c;
    let kappa = eta_c * gamma;
    let dt = DEFAULT_DT_GAMMA / gamma;
    let steps = (args.segments + 1) * args.segment_len / 2;
    let run = LangevinRun::new(
        gamma,
        kappa,
        dt,
        steps as f64 * dt,
        args.trajectories,
        args.seed,
    )?;
    let welch = Welch::new(args.segment_len)?;
    let sums = (0..run.n_trajectories)
        .into_par_iter()
        .map(|j| trajectory_psd_sum(&run, j, &welch))
        .collect::<ringlab_core::Result<Vec<_>>>()?;
    let sim = finish_average(&run, &welch, sums)?;
    let analytic = analytic_psd(kappa, gamma, &sim.freq_grid)?;
    let deviation = max_db_deviation(&sim, kappa, gamma, args.max_omega_gamma)?;

    let mut t = OutputTable::new(&[
        "freq_hz",
        "psd_shotnoise_units",
        "psd_db",
        "psd_analytic",
        "psd_analytic_db",
    ]);
    t.meta("seed", run.seed)
        .meta("dt", format_number(run.dt))
        .meta("duration", format_number(run.duration))
        .meta("n_trajectories", run.n_trajectories)
        .meta("gamma_total", format_number(gamma))
        .meta("kappa_eff", format_number(kappa))
        .meta("eta_c", format_number(eta_c))
        .meta("tau_c", format_number(tau_c))
        .meta("segment_len", args.segment_len)
        .meta("n_segments", sim.n_segments)
        .meta("max_omega_over_gamma", format_number(args.max_omega_gamma))
        .meta("max_deviation_db", format_number(deviation));
    let sim_db = sim.psd_db();
    let an_db = analytic.psd_db();
    for i in 0..sim.freq_grid.len() {
        t.push(vec![
            sim.freq_grid[i].into(),
            sim.psd[i].into(),
            sim_db[i].into(),
            analytic.psd[i].into(),
            an_db[i].into(),
        ]);
    }
    let summary = format!(
        "max |sim - analytic| = {deviation:.4} dB for omega <= {} Gamma (eta_c = {eta_c:.4}, tau_c = {:.3} ns, {} trajectories, seed {})",
        args.max_omega_gamma,
        tau_c * 1e9,
        run.n_trajectories,
        run.seed
    );
    let mut outcome = Outcome::new(t, summary);
    if !(deviation <= args.tolerance_db) {
        outcome.failure = Some(CliError::numeric(format!(
            "max |sim - analytic| = {deviation:.4} dB exceeds {} dB",
            args.tolerance_db
        )));
    }
    Ok(outcome)
}

pub fn shot_cal(powers: &[f64], seed: u64, samples: usize) -> Result<Outcome> {
    let params = ShotNoiseParams {
        n_samples: samples,
        seed,
        ..ShotNoiseParams::default()
    };
    if samples < params.segment_len {
        return Err(CliError::usage(format!(
            "--samples must be at least {}",
            params.segment_len
        )));
    }
    let table = shot_noise_calibration(powers, &params)?;
    let fit = calibration_fit(&table)?;
    let mut t = OutputTable::new(&["power_mw", "psd_level"]);
    t.meta("seed", seed)
        .meta("slope", format_number(fit.slope))
        .meta("slope_stderr", format_number(fit.slope_stderr))
        .meta("r_squared", format_number(fit.r_squared));
    for (p, level) in &table {
        t.push(vec![(*p).into(), (*level).into()]);
    }
    let summary = format!(
        "{} powers: slope {:.6} +- {:.2e} per mW through the origin, r^2 = {:.6}",
        table.len(),
        fit.slope,
        fit.slope_stderr,
        fit.r_squared
    );
    Ok(Outcome::new(t, summary))
}

const CROSSING_SCHEMA: &[Column] = &[
    Column(&["p1_mw"]),
    Column(&["p2_mw"]),
    Column(&["branch"]),
    Column(&["resonance_nm", "resonance_rad_s"]),
];

/// Reads a crossing dataset CSV.
pub fn read_crossing_data(path: &Path) -> Result<Vec<CrossingRow>> {
    let table = read_csv(open(path)?, CROSSING_SCHEMA)?;
    let p1 = table.numbers("p1_mw")?;
    let p2 = table.numbers("p2_mw")?;
    let resonance = if table.has("resonance_nm") {
        table
            .numbers("resonance_nm")?
            .into_iter()
            .map(nm_to_rad_s)
            .collect()
    } else {
        table.numbers("resonance_rad_s")?
    };
    let branches = table
        .texts("branch")?
        .into_iter()
        .map(|(line, s)| {
            s.parse::<Branch>().map_err(|_| CsvError::BadCell {
                line,
                column: "branch".into(),
                message: format!("'{s}' is not lower or upper"),
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((0..p1.len())
        .map(|i| CrossingRow {
            p1: p1[i],
            p2: p2[i],
            branch: branches[i],
            resonance: resonance[i],
        })
        .collect())
}

fn set_param(p: &mut CrossingParams, name: &str, value: f64) -> Result<()> {
    let slot = match name {
        "kappa_12" => &mut p.kappa_12,
        "omega1_0" => &mut p.omega1_0,
        "omega2_0" => &mut p.omega2_0,
        "alpha1" => &mut p.alpha1,
        "alpha2" => &mut p.alpha2,
        _ => {
            return Err(CliError::usage(format!(
                "unknown parameter '{name}', expected one of {}",
                CrossingParams::NAMES.join(", ")
            )))
        }
    };
    *slot = value;
    Ok(())
}

pub fn fit_crossing(data: &Path, fix: &[String], init: &[String]) -> Result<Outcome> {
    let rows = read_crossing_data(data)?;
    let dataset = CrossingDataset::new(rows)?;
    let mut fixed = FixedParams::default();
    for name in fix {
        fixed.fix(name).map_err(CliError::usage)?;
    }
    let mut guess = auto_initial_guess(&dataset)?;
    for item in init {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--init '{item}' is not NAME=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("--init '{item}': '{value}' is not a number")))?;
        set_param(&mut guess, name.trim(), value)?;
    }
    let fit = fit_avoided_crossing(&dataset, Some(guess), fixed, &LmOptions::default())?;

    let mut t = OutputTable::new(&["param", "value", "stderr"]);
    t.meta("residual_rms_rad_s", format_number(fit.residual_rms))
        .meta("n_iterations", fit.n_iterations)
        .meta("converged", fit.converged);
    let mut report = vec![format!(
        "{:<10} {:>24} {:>24}  {}",
        "param", "value", "stderr", "readable"
    )];
    for p in &fit.params {
        t.push(vec![p.name.into(), p.value.into(), p.stderr.into()]);
        let readable = match p.name {
            "omega1_0" | "omega2_0" => format!("{:.6} nm", rad_s_to_nm(p.value)),
            "kappa_12" => format!(
                "{:.4} +- {:.4} MHz",
                rad_s_to_mhz(p.value),
                rad_s_to_mhz(p.stderr)
            ),
            _ => format!(
                "{:.4} +- {:.4} MHz/mW",
                rad_s_to_mhz(p.value),
                rad_s_to_mhz(p.stderr)
            ),
        };
        report.push(format!(
            "{:<10} {:>24} {:>24}  {}{}",
            p.name,
            format_number(p.value),
            format_number(p.stderr),
            readable,
            if p.fixed { " (fixed)" } else { "" }
        ));
    }
    let k = fit.get("kappa_12").expect("kappa_12 is always reported");
    let summary = format!(
        "{} rows, {} iterations: kappa_12/2pi = {:.4} +- {:.4} MHz, residual rms/2pi = {:.4} MHz",
        dataset.rows().len(),
        fit.n_iterations,
        rad_s_to_mhz(k.value),
        rad_s_to_mhz(k.stderr),
        rad_s_to_mhz(fit.residual_rms)
    );
    let mut outcome = Outcome::new(t, summary);
    outcome.report = report;
    Ok(outcome)
}

const TRACE_SCHEMA: &[Column] = &[
    Column(&["omega_rad_s", "wavelength_nm"]),
    Column(&["t_power"]),
];

/// Reads a transmission trace CSV, keeping rows `window` (file order),
/// and returns it on an increasing frequency grid.
pub fn read_trace(
    path: &Path,
    window: Option<std::ops::Range<usize>>,
) -> Result<TransmissionTrace> {
    let table = read_csv(open(path)?, TRACE_SCHEMA)?;
    let by_wavelength = table.has("wavelength_nm");
    let x = table.numbers(if by_wavelength {
        "wavelength_nm"
    } else {
        "omega_rad_s"
    })?;
    let t = table.numbers("t_power")?;
    let range = window.unwrap_or(0..x.len());
    if range.end > x.len() {
        return Err(CliError::usage(format!(
            "--window {}:{} exceeds the {} rows of {}",
            range.start,
            range.end,
            x.len(),
            path.display()
        )));
    }
    let mut pts: Vec<(f64, f64)> = x[range.clone()]
        .iter()
        .zip(&t[range])
        .map(|(&x, &t)| (if by_wavelength { nm_to_rad_s(x) } else { x }, t))
        .collect();
    if by_wavelength {
        pts.reverse();
    }
    let (w, t) = pts.into_iter().unzip();
    Ok(TransmissionTrace::new(w, t)?)
}

pub fn fit_dip(
    path: &Path,
    window: Option<std::ops::Range<usize>>,
    regime: Option<RegimeArg>,
) -> Result<Outcome> {
    let trace = read_trace(path, window)?;
    let n = trace.len();
    let fit = fit_lorentzian_dip(&trace, 0..n, &LmOptions::default())?;
    let mut t = OutputTable::new(&["param", "value", "stderr"]);
    t.meta("residual_rms", format_number(fit.residual_rms))
        .meta("n_iterations", fit.n_iterations);
    let mut report = Vec::new();
    for w in &fit.warnings {
        match w {
            DipFitWarning::ResidualStructure { runs_z } => {
                t.meta(
                    "warning",
                    format!("residual_structure runs_z={}", format_number(*runs_z)),
                );
                report.push(format!(
                    "warning: residual signs are clustered (runs z = {runs_z:.2}); \
                     the window may hold a sloped baseline or a second dip"
                ));
            }
        }
    }
    t.push(vec![
        "omega0_rad_s".into(),
        fit.omega0.into(),
        fit.omega0_stderr.into(),
    ]);
    t.push(vec![
        "t_min".into(),
        fit.t_min.into(),
        fit.t_min_stderr.into(),
    ]);
    t.push(vec![
        "fwhm_rad_s".into(),
        fit.fwhm.into(),
        fit.fwhm_stderr.into(),
    ]);
    t.push(vec![
        "baseline".into(),
        fit.baseline.into(),
        fit.baseline_stderr.into(),
    ]);
    let mut summary = format!(
        "{n} samples: t_min = {:.4} +- {:.4}, fwhm/2pi = {:.4} MHz",
        fit.t_min,
        fit.t_min_stderr,
        rad_s_to_mhz(fit.fwhm)
    );
    if let Some(regime) = regime {
        let regime = match regime {
            RegimeArg::Overcoupled => CouplingRegime::Overcoupled,
            RegimeArg::Undercoupled => CouplingRegime::Undercoupled,
        };
        let eta = eta_c_from_tmin(fit.t_min, regime).map_err(|_| {
            CliError::numeric(format!("fitted t_min = {} is outside [0, 1]", fit.t_min))
        })?;
        // d eta / d t_min = +-1 / (4 sqrt(t_min))
        let se = if fit.t_min > 0.0 {
            fit.t_min_stderr / (4.0 * fit.t_min.sqrt())
        } else {
            f64::NAN
        };
        t.push(vec!["eta_c".into(), eta.into(), se.into()]);
        summary.push_str(&format!(", eta_c = {eta:.4} +- {se:.4}"));
    }
    let mut outcome = Outcome::new(t, summary);
    outcome.report = report;
    Ok(outcome)
}
