//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ringlab_core::device::ValidatedConfig;
use ringlab_core::Branch;

use crate::commands;
use crate::config::{default_config, load_config};
use crate::error::CliError;
use crate::range::{parse_index_range, parse_list, parse_range};
use crate::table::OutputTable;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  2  usage: bad flags or an argument outside its valid range
  3  config: unreadable or invalid configuration file
  4  data: unreadable or malformed CSV, data that a command cannot use, or an output write failure
  5  numeric: a fit did not converge or is rank deficient, or a simulation check failed

Errors are printed to stderr as a single line: error[<kind>]: <message>

CSV output uses a header row and 17 significant digits. Lines starting
with '#' are comments (run metadata as '# key=value'). Frequencies in
flags ending in _mhz are ordinary frequencies; columns ending in _rad_s
are angular frequencies.";

#[derive(Debug, Parser)]
#[command(
    name = "ringlab",
    version,
    about = "Coupled double-ring OPO simulator: supermodes, transmission, squeezing and fits",
    after_help = EXIT_CODES,
    arg_required_else_help = true
)]
pub struct Cli {
    /// Device configuration (TOML). Defaults to the bundled calibrated device.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the CSV to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// A sweep grid, `start:stop:step` or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn grid(s: &str) -> Result<Grid, String> {
    parse_range(s).map(Grid)
}

fn list(s: &str) -> Result<Grid, String> {
    parse_list(s).map(Grid)
}

fn branch(s: &str) -> Result<Branch, String> {
    s.parse()
        .map_err(|_| format!("'{s}' is not a branch (lower or upper)"))
}

fn index_range(s: &str) -> Result<std::ops::Range<usize>, String> {
    parse_index_range(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RegimeArg {
    Overcoupled,
    Undercoupled,
}

#[derive(Debug, Clone, Args)]
pub struct HeaterSweep {
    /// Supermode branch.
    #[arg(long, value_parser = branch, default_value = "lower")]
    pub branch: Branch,
    /// R1 heater powers, mW (start:stop:step).
    #[arg(long, value_parser = grid, default_value = "0:50:0.5", value_name = "MW")]
    pub p1: Grid,
    /// R2 heater power, mW.
    #[arg(long, default_value_t = 10.0, value_name = "MW")]
    pub p2: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration file and print the derived device parameters.
    #[command(after_help = "Output CSV: key,value (rates in rad/s, powers in mW)")]
    Validate,

    /// Simulated bus transmission at fixed heater powers.
    #[command(after_help = "\
Output CSV: omega_rad_s,t_power
Dip report (--dips): omega_center_rad_s,t_min,fwhm_rad_s,regime,eta_c
  regime is overcoupled, undercoupled or indeterminate; eta_c is NaN for
  overlapping dips.")]
    Transmission {
        /// R1 heater power, mW.
        #[arg(long, default_value_t = 25.0, value_name = "MW")]
        p1: f64,
        /// R2 heater power, mW.
        #[arg(long, default_value_t = 10.0, value_name = "MW")]
        p2: f64,
        /// Probe frequencies relative to the pump, MHz (start:stop:step).
        /// Defaults to both supermodes +- 2 kappa_12 at 1/40 of the
        /// narrower linewidth.
        #[arg(long, value_parser = grid, value_name = "RANGE")]
        detuning_mhz: Option<Grid>,
        /// Also write the dip report CSV here.
        #[arg(long, value_name = "PATH")]
        dips: Option<PathBuf>,
    },

    /// Supermode frequencies and R1 energy fractions along a heater sweep.
    #[command(after_help = "\
Output CSV: p1_mw,p2_mw,omega_lower_rad_s,omega_upper_rad_s,frac1_lower,frac1_upper
With --dataset: p1_mw,p2_mw,branch,resonance_rad_s (input format of fit-crossing)")]
    CrossingSweep {
        /// R1 heater powers, mW.
        #[arg(long, value_parser = grid, default_value = "0:50:0.5", value_name = "MW")]
        p1: Grid,
        /// R2 heater power, mW: one value, or a grid paired point by point
        /// with --p1.
        #[arg(long, value_parser = grid, default_value = "10", value_name = "MW")]
        p2: Grid,
        /// Emit both branches as a crossing dataset.
        #[arg(long)]
        dataset: bool,
        /// Gaussian noise added to dataset resonances, MHz.
        #[arg(long, default_value_t = 0.0, requires = "dataset", value_name = "MHZ")]
        noise_mhz: f64,
        /// Seed for --noise-mhz.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Coupling efficiency and photon lifetime along a heater sweep.
    #[command(after_help = "Output CSV: p1_mw,omega_rad_s,eta_c,tau_c_s")]
    EtacSweep {
        #[command(flatten)]
        sweep: HeaterSweep,
    },

    /// Measured and on-chip squeezing at one sideband along a heater sweep.
    #[command(after_help = "\
Output CSV: eta_c,s_measured_db,s_onchip_db,omega_sideband_hz,tau_c_s,squeezing_measured_db,squeezing_onchip_db
  Rows are ordered by eta_c. s_*_db are noise levels relative to shot noise
  (negative when squeezed); squeezing_*_db are the same magnitudes as
  positive numbers. omega_sideband_hz is the sideband frequency in Hz.")]
    SqueezeSweep {
        #[command(flatten)]
        sweep: HeaterSweep,
        /// Sideband frequency, MHz.
        #[arg(long, default_value_t = 3.0, value_name = "MHZ")]
        sideband_mhz: f64,
    },

    /// Squeezing spectrum for given efficiencies and photon lifetime.
    #[command(after_help = "Output CSV: freq_hz,s_linear,s_db,squeezing_db")]
    SqueezeSpectrum {
        /// Coupling efficiency.
        #[arg(long)]
        eta_c: f64,
        /// Detection efficiency. Defaults to the configured detection chain.
        #[arg(long)]
        eta_d: Option<f64>,
        /// Photon lifetime, s.
        #[arg(long, value_name = "S")]
        tau_c: f64,
        /// Sideband frequencies, Hz (start:stop:step).
        #[arg(long, value_parser = grid, default_value = "0:1e7:1e4", value_name = "HZ")]
        f: Grid,
    },

    /// Monte Carlo Langevin simulation of the output noise spectrum,
    /// checked against the closed form.
    #[command(after_help = "\
Output CSV: freq_hz,psd_shotnoise_units,psd_db,psd_analytic,psd_analytic_db
  preceded by '# key=value' lines: seed, dt, duration, n_trajectories,
  gamma_total, kappa_eff, eta_c, tau_c, segment_len, n_segments,
  max_omega_over_gamma, max_deviation_db.
Exits with status 5 when the deviation exceeds --tolerance-db.")]
    LangevinVerify {
        /// Noise RNG seed. Trajectory j uses ChaCha8 streams 2j and 2j + 1.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent noise realisations averaged.
        #[arg(long, default_value_t = 200)]
        trajectories: usize,
        /// Branch of the operating point taken from the config.
        #[arg(long, value_parser = branch, default_value = "lower")]
        branch: Branch,
        /// R1 heater power, mW.
        #[arg(long, default_value_t = 50.0, value_name = "MW")]
        p1: f64,
        /// R2 heater power, mW.
        #[arg(long, default_value_t = 10.0, value_name = "MW")]
        p2: f64,
        /// Override the coupling efficiency of the operating point.
        #[arg(long)]
        eta_c: Option<f64>,
        /// Override the photon lifetime of the operating point, s.
        #[arg(long, value_name = "S")]
        tau_c: Option<f64>,
        /// Samples per Welch segment (power of two).
        #[arg(long, default_value_t = ringlab_core::langevin::DEFAULT_SEGMENT_LEN)]
        segment_len: usize,
        /// Half-overlapping segments per trajectory.
        #[arg(long, default_value_t = ringlab_core::langevin::DEFAULT_SEGMENTS)]
        segments: usize,
        /// Compare over angular frequencies up to this multiple of the total
        /// decay rate.
        #[arg(long, default_value_t = 3.0)]
        max_omega_gamma: f64,
        /// Largest allowed deviation from the closed form, dB.
        #[arg(long, default_value_t = 0.2, value_name = "DB")]
        tolerance_db: f64,
    },

    /// Simulated balanced-detection shot noise versus optical power, with a
    /// through-origin line fit.
    #[command(after_help = "\
Output CSV: power_mw,psd_level
  preceded by '# key=value' lines with the fit: slope, slope_stderr, r_squared.")]
    ShotCal {
        /// Optical powers, mW (comma separated).
        #[arg(long, value_parser = list, default_value = "1,2,4,8", value_name = "LIST")]
        powers: Grid,
        /// Noise RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per power.
        #[arg(long, default_value_t = 1 << 18)]
        samples: usize,
    },

    /// Fit supermode resonances versus heater powers.
    #[command(after_help = "\
Input CSV: p1_mw,p2_mw,branch,resonance_nm (or resonance_rad_s)
  branch is lower or upper; at least 6 rows and 2 per branch.
Output CSV: param,value,stderr
  params kappa_12, omega1_0, omega2_0 in rad/s, alpha1, alpha2 in rad/s per mW;
  preceded by '# key=value' lines: residual_rms_rad_s, n_iterations, converged.
A plain-text table is printed to stderr.")]
    FitCrossing {
        /// Measured resonances
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Hold a parameter at its initial value (repeatable).
        #[arg(long, value_name = "NAME")]
        fix: Vec<String>,
        /// Initial value NAME=VALUE in rad/s or rad/s per mW (repeatable).
        /// Unset parameters come from the automatic guess.
        #[arg(long, value_name = "NAME=VALUE")]
        init: Vec<String>,
    },

    /// Fit a Lorentzian dip with a free baseline to a measured trace.
    #[command(after_help = "\
Input CSV: omega_rad_s (or wavelength_nm),t_power
Output CSV: param,value,stderr
  params omega0_rad_s, t_min, fwhm_rad_s, baseline, and eta_c with --regime.")]
    FitDip {
        /// Transmission trace
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
        /// Rows to fit, start:end (end exclusive, file order).
        #[arg(long, value_parser = index_range, value_name = "RANGE")]
        window: Option<std::ops::Range<usize>>,
        /// Converts t_min to eta_c.
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
    },
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub table: OutputTable,
    /// Lines for stderr before the summary.
    pub report: Vec<String>,
    pub summary: String,
    /// Failure to report after the output has been written.
    pub failure: Option<CliError>,
}

impl Outcome {
    pub fn new(table: OutputTable, summary: impl Into<String>) -> Self {
        Self {
            table,
            report: Vec::new(),
            summary: summary.into(),
            failure: None,
        }
    }
}

fn config_of(cli: &Cli) -> Result<ValidatedConfig, CliError> {
    match &cli.config {
        Some(path) => Ok(load_config(path)?),
        None => Ok(default_config()),
    }
}

pub(crate) fn write_file(path: &std::path::Path, table: &OutputTable) -> Result<(), CliError> {
    std::fs::write(path, table.to_bytes())
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let config = config_of(cli)?;
    match &cli.command {
        Command::Validate => commands::validate(&config),
        Command::Transmission {
            p1,
            p2,
            detuning_mhz,
            dips,
        } => commands::transmission(&config, (*p1, *p2), detuning_mhz.as_ref(), dips.as_deref()),
        Command::CrossingSweep {
            p1,
            p2,
            dataset,
            noise_mhz,
            seed,
        } => commands::crossing_sweep(&config, &p1.0, &p2.0, *dataset, *noise_mhz, *seed),
        Command::EtacSweep { sweep } => commands::etac_sweep(&config, sweep),
        Command::SqueezeSweep {
            sweep,
            sideband_mhz,
        } => commands::squeeze_sweep(&config, sweep, *sideband_mhz),
        Command::SqueezeSpectrum {
            eta_c,
            eta_d,
            tau_c,
            f,
        } => commands::squeeze_spectrum(
            *eta_c,
            eta_d.unwrap_or_else(|| config.eta_d()),
            *tau_c,
            &f.0,
        ),
        Command::LangevinVerify {
            seed,
            trajectories,
            branch,
            p1,
            p2,
            eta_c,
            tau_c,
            segment_len,
            segments,
            max_omega_gamma,
            tolerance_db,
        } => commands::langevin_verify(
            &config,
            &commands::LangevinArgs {
                seed: *seed,
                trajectories: *trajectories,
                branch: *branch,
                heater: (*p1, *p2),
                eta_c: *eta_c,
                tau_c: *tau_c,
                segment_len: *segment_len,
                segments: *segments,
                max_omega_gamma: *max_omega_gamma,
                tolerance_db: *tolerance_db,
            },
        ),
        Command::ShotCal {
            powers,
            seed,
            samples,
        } => commands::shot_cal(&powers.0, *seed, *samples),
        Command::FitCrossing { data, fix, init } => commands::fit_crossing(data, fix, init),
        Command::FitDip {
            trace,
            window,
            regime,
        } => commands::fit_dip(trace, window.clone(), *regime),
    }
}

/// Runs one invocation and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                K::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stderr, "{}", e.render());
                    2
                }
                _ => {
                    let rendered = e.render().to_string();
                    let first = rendered.lines().next().unwrap_or("invalid arguments");
                    let msg = first.strip_prefix("error: ").unwrap_or(first);
                    let err = CliError::usage(msg);
                    let _ = writeln!(stderr, "{}", err.line());
                    err.exit_code()
                }
            };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let written = match &cli.out {
                Some(path) => write_file(path, &outcome.table),
                None => outcome
                    .table
                    .write_to(&mut *stdout)
                    .map_err(|e| CliError::data(format!("stdout: {e}"))),
            };
            for line in &outcome.report {
                let _ = writeln!(stderr, "{line}");
            }
            if let Err(e) = written {
                let _ = writeln!(stderr, "{}", e.line());
                return e.exit_code();
            }
            let _ = writeln!(stderr, "{}", outcome.summary);
            match outcome.failure {
                Some(e) => {
                    let _ = writeln!(stderr, "{}", e.line());
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.line());
            e.exit_code()
        }
    }
}
