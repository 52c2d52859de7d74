//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use ringlab_core::device::{
    detection_efficiency, validate_config, CouplingParams, DetectionChain, DeviceConfig,
    HeaterModel, RingLabel, RingParams, ValidatedConfig,
};
use ringlab_core::fit::{
    fit_avoided_crossing, CrossingDataset, CrossingParams, CrossingRow, FixedParams, LmOptions,
};
use ringlab_core::langevin::{
    calibration_fit, finish_average, max_db_deviation, shot_noise_calibration, trajectory_psd_sum,
    LangevinRun, ShotNoiseParams, Welch, DEFAULT_SEGMENT_LEN,
};
use ringlab_core::spectra::{analyze_trace, transmission_at, TransmissionTrace, PASSIVITY_EPS};
use ringlab_core::squeezing::{db, infer_onchip, solve_tau_c, squeezing_level, undb};
use ringlab_core::supermodes::{eta_c_vs_heater, solve, supermode_frequencies};
use ringlab_core::units::{hz_to_rad_s, mhz_to_rad_s};
use ringlab_core::Branch;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn device() -> ValidatedConfig {
    ringlab::default_config()
}

fn p1_grid() -> Vec<f64> {
    (0..=100).map(|k| 0.5 * k as f64).collect()
}

fn eta_c_range() -> Outcome {
    let sweep =
        eta_c_vs_heater(&device(), Branch::Lower, &p1_grid(), 10.0).map_err(|e| e.to_string())?;
    let eta: Vec<f64> = sweep.iter().map(|p| p.eta_c).collect();
    let lo = eta.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone = eta.windows(2).all(|w| w[1] > w[0]);
    check(
        lo <= 0.12 && hi >= 0.68 && monotone,
        format!("lower branch eta_c {lo:.4} .. {hi:.4}, monotone = {monotone}"),
    )
}

fn squeezing_endpoints() -> Outcome {
    let omega = hz_to_rad_s(3e6);
    let tau = solve_tau_c(0.70, 1.0, undb(-3.9), omega).map_err(|e| e.to_string())?;
    let onchip = -db(squeezing_level(0.70, 1.0, tau, omega).unwrap()).unwrap();
    let measured = -db(squeezing_level(0.70, 0.60, tau, omega).unwrap()).unwrap();
    // the calibrated device at the top of its sweep
    let top = solve(&device(), Branch::Lower, 50.0, 10.0).map_err(|e| e.to_string())?;
    let device_onchip = -db(squeezing_level(top.eta_c, 1.0, top.tau_c, omega).unwrap()).unwrap();
    check(
        (22e-9..=23e-9).contains(&tau)
            && (onchip - 3.9).abs() <= 0.3
            && (measured - 2.0).abs() <= 0.4
            && (device_onchip - 3.9).abs() <= 0.3,
        format!(
            "tau_c = {:.3} ns (Omega tau_c = {:.4}): on-chip {onchip:.3} dB, measured {measured:.3} dB; \
             device tau_c {:.3} ns gives {device_onchip:.3} dB on chip",
            tau * 1e9,
            omega * tau,
            top.tau_c * 1e9
        ),
    )
}

fn detection_budget() -> Outcome {
    let cfg = device();
    let eta_d = detection_efficiency(&cfg.detection);
    check(
        (eta_d - 0.579).abs() <= 0.005,
        format!("{} stages, eta_d = {eta_d:.4}", cfg.detection.stages.len()),
    )
}

fn langevin_oracle() -> Outcome {
    let tau = 22.58e-9;
    let gamma = 1.0 / tau;
    let welch = Welch::new(DEFAULT_SEGMENT_LEN).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (seed, eta) in [(1u64, 0.1), (2, 0.5), (3, 0.7)] {
        let run =
            LangevinRun::with_defaults(gamma, eta * gamma, 200, seed).map_err(|e| e.to_string())?;
        let sums = (0..run.n_trajectories)
            .into_par_iter()
            .map(|j| trajectory_psd_sum(&run, j, &welch))
            .collect::<ringlab_core::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let sim = finish_average(&run, &welch, sums).map_err(|e| e.to_string())?;
        let dev = max_db_deviation(&sim, run.kappa_eff, gamma, 3.0).map_err(|e| e.to_string())?;
        ok &= dev <= 0.2;
        parts.push(format!("eta_c {eta}: {dev:.3} dB"));
    }
    check(
        ok,
        format!(
            "max |sim - analytic| over [0, 3 Gamma]: {}",
            parts.join(", ")
        ),
    )
}

/// Fine grid around each supermode, coarse in between.
fn probe_grid(cfg: &ValidatedConfig, p1: f64, p2: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    for b in [Branch::Lower, Branch::Upper] {
        let s = solve(cfg, b, p1, p2).unwrap();
        let g = 1.0 / s.tau_c;
        grid.extend((-2000..=2000).map(|k| s.omega + k as f64 * g / 200.0));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn cross_oracle() -> Outcome {
    let cfg = device();
    let p2 = 10.0;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for k in 0..20 {
        let p1 = 50.0 * k as f64 / 19.0;
        let grid = probe_grid(&cfg, p1, p2);
        let (w1, w2) = cfg.ring_frequencies(p1, p2).unwrap();
        let t = grid
            .iter()
            .map(|&w| transmission_at(&cfg, w1, w2, w))
            .collect();
        let trace = TransmissionTrace::new(grid, t).unwrap();
        let reports = analyze_trace(&cfg, (p1, p2), &trace).map_err(|e| e.to_string())?;
        for b in [Branch::Lower, Branch::Upper] {
            let s = solve(&cfg, b, p1, p2).unwrap();
            let r = reports
                .iter()
                .min_by(|x, y| {
                    (x.dip.omega_center - s.omega)
                        .abs()
                        .total_cmp(&(y.dip.omega_center - s.omega).abs())
                })
                .ok_or(format!("no dip at p1 = {p1}"))?;
            let from_tmin = r.eta_c.ok_or(format!("unresolved dip at p1 = {p1}"))?;
            worst = worst.max((from_tmin - s.eta_c).abs());
            checked += 1;
        }
    }
    check(
        worst <= 0.02,
        format!(
            "20 heater settings, {checked} dips: max |eta_c(T_min) - eta_c(rates)| = {worst:.5}"
        ),
    )
}

fn crossing_data(t: &CrossingParams, sigma: f64, seed: u64) -> CrossingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    for i in 0..15 {
        let p1 = 50.0 * i as f64 / 14.0;
        let p2 = 8.0 + 0.3 * ((i * 4) % 15) as f64;
        for b in [Branch::Lower, Branch::Upper] {
            let e = if sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            rows.push(CrossingRow {
                p1,
                p2,
                branch: b,
                resonance: t.predict(b, p1, p2) + e,
            });
        }
    }
    CrossingDataset::new(rows).unwrap()
}

fn fitter_recovery() -> Outcome {
    let cfg = device();
    let truth = CrossingParams {
        kappa_12: cfg.coupling.kappa_12,
        omega1_0: cfg.ring1.omega0,
        omega2_0: cfg.ring2.omega0,
        alpha1: cfg.ring1.heater.alpha,
        alpha2: cfg.ring2.heater.alpha,
    };
    let opts = LmOptions::default();
    let exact = fit_avoided_crossing(
        &crossing_data(&truth, 0.0, 0),
        None,
        FixedParams::default(),
        &opts,
    )
    .map_err(|e| e.to_string())?
    .crossing_params()
    .unwrap();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let exact_err = rel(exact.kappa_12, truth.kappa_12)
        .max(rel(exact.alpha1, truth.alpha1))
        .max(rel(exact.alpha2, truth.alpha2))
        .max((exact.omega1_0 - truth.omega1_0).abs() / truth.kappa_12)
        .max((exact.omega2_0 - truth.omega2_0).abs() / truth.kappa_12);
    let sigma = 0.01 * truth.kappa_12;
    let mut within = 0;
    for seed in 0..100 {
        let fit = fit_avoided_crossing(
            &crossing_data(&truth, sigma, seed),
            None,
            FixedParams::default(),
            &opts,
        )
        .map_err(|e| format!("seed {seed}: {e}"))?;
        let k = fit.get("kappa_12").unwrap();
        if (k.value - truth.kappa_12).abs() <= 3.0 * k.stderr {
            within += 1;
        }
    }
    check(
        exact_err <= 1e-8 && within >= 95,
        format!("zero noise: max relative error {exact_err:.2e}; 1% noise: {within}/100 within 3 stderr"),
    )
}

fn shot_noise_linearity() -> Outcome {
    let table = shot_noise_calibration(&[1.0, 2.0, 4.0, 8.0], &ShotNoiseParams::default())
        .map_err(|e| e.to_string())?;
    let fit = calibration_fit(&table).map_err(|e| e.to_string())?;
    check(
        fit.r_squared > 0.999,
        format!(
            "through-origin slope {:.5}, R^2 = {:.6}",
            fit.slope, fit.r_squared
        ),
    )
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn random_config(g1: f64, g2: f64, ke: f64, k12: f64) -> ValidatedConfig {
    let heater = HeaterModel {
        alpha: mhz_to_rad_s(10.0),
        p_max: 100.0,
    };
    let ring = |label, offset: f64, gamma: f64| RingParams {
        label,
        radius: 115.0,
        omega0: 1.2e15 + offset,
        gamma_i: gamma,
        heater,
    };
    validate_config(DeviceConfig {
        ring1: ring(RingLabel::R1, 0.0, g1),
        ring2: ring(RingLabel::R2, 3e8, g2),
        coupling: CouplingParams {
            kappa_ext: ke,
            kappa_12: k12,
        },
        detection: DetectionChain::default(),
        pump_wavelength: 1561.1,
    })
    .unwrap()
}

fn property_suites() -> Outcome {
    run_property(
        "trace identity and splitting bound",
        (-1e10f64..1e10, -1e10f64..1e10, 1e5f64..1e10),
        |(d1, d2, k12)| {
            let (w1, w2) = (1.2e15 + d1, 1.2e15 + d2);
            let (plus, minus) = supermode_frequencies(w1, w2, k12).unwrap();
            prop_assert!(((plus + minus) - (w1 + w2)).abs() <= 1e-15 * (w1 + w2) * 4.0);
            let split = plus - minus;
            let bound = 2.0 * k12.max(0.5 * (w1 - w2).abs());
            prop_assert!(split >= bound * (1.0 - 1e-6) - 1.0);
            Ok(())
        },
    )?;
    run_property(
        "squeezing monotone and bounded",
        (
            0.0f64..=1.0,
            0.0f64..=1.0,
            1e-10f64..1e-6,
            0.0f64..1e9,
            1.0f64..2.0,
        ),
        |(ec, ed, tau, w, factor)| {
            let s = squeezing_level(ec, ed, tau, w).unwrap();
            let s_far = squeezing_level(ec, ed, tau, w * factor).unwrap();
            prop_assert!(s >= 1.0 - ec * ed - 1e-15);
            prop_assert!(s <= 1.0);
            prop_assert!(s_far >= s);
            Ok(())
        },
    )?;
    run_property(
        "passivity",
        (
            (1e5f64..1e9, 1e5f64..1e9, 1e5f64..1e10, 1e6f64..1e10),
            (0.0f64..100.0, 0.0f64..100.0),
            proptest::collection::vec(-2e10f64..2e10, 16),
        ),
        |((g1, g2, ke, k12), (p1, p2), offsets)| {
            let cfg = random_config(g1, g2, ke, k12);
            let (w1, w2) = cfg.ring_frequencies(p1, p2).unwrap();
            for d in offsets.iter().chain(&[0.0, 3e8]) {
                let t = transmission_at(&cfg, w1, w2, 1.2e15 + d);
                prop_assert!((0.0..=1.0 + PASSIVITY_EPS).contains(&t), "T = {t}");
            }
            Ok(())
        },
    )?;
    run_property(
        "on-chip inversion",
        (0.0f64..=1.0, 0.01f64..=1.0, 1e-10f64..1e-6, 0.0f64..1e9),
        |(ec, ed, tau, w)| {
            let measured = squeezing_level(ec, ed, tau, w).unwrap();
            let onchip = squeezing_level(ec, 1.0, tau, w).unwrap();
            let back = infer_onchip(measured, ed, w * tau).unwrap();
            prop_assert!((back - onchip).abs() <= 1e-12 * onchip.abs().max(1e-3));
            Ok(())
        },
    )?;
    Ok("1000 draws each: trace identity + splitting bound, squeezing bound + monotonicity, passivity, inversion".to_string())
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ringlab");
    let invocations: [&[&str]; 5] = [
        &[
            "etac-sweep",
            "--branch",
            "lower",
            "--p1",
            "0:50:0.5",
            "--p2",
            "10",
        ],
        &[
            "langevin-verify",
            "--seed",
            "7",
            "--trajectories",
            "16",
            "--tolerance-db",
            "100",
        ],
        &["shot-cal", "--seed", "5"],
        &[
            "crossing-sweep",
            "--dataset",
            "--p1",
            "0:50:5",
            "--p2",
            "5:15:1",
            "--noise-mhz",
            "1",
            "--seed",
            "2",
        ],
        &[
            "squeeze-spectrum",
            "--eta-c",
            "0.7",
            "--eta-d",
            "1",
            "--tau-c",
            "22.5e-9",
            "--f",
            "0:6e6:1e4",
        ],
    ];
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().expect("run ringlab");
        (out.status.code(), out.stdout)
    };
    for args in invocations {
        let (code_a, a) = run(args);
        let (code_b, b) = run(args);
        if code_a != Some(0) || code_b != Some(0) {
            return Err(format!("{} exited with {code_a:?}/{code_b:?}", args[0]));
        }
        if a != b || a.is_empty() {
            return Err(format!("{}: outputs differ", args[0]));
        }
    }
    let (_, other) = run(&["shot-cal", "--seed", "6"]);
    let (_, base) = run(&["shot-cal", "--seed", "5"]);
    check(
        other != base,
        format!(
            "{} commands byte-identical across repeated runs; seed changes output",
            invocations.len()
        ),
    )
}

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            number: 1,
            name: "eta_c tuning range",
            budget: Duration::from_secs(1),
            run: eta_c_range,
        },
        Criterion {
            number: 2,
            name: "squeezing endpoints",
            budget: Duration::from_secs(1),
            run: squeezing_endpoints,
        },
        Criterion {
            number: 3,
            name: "detection budget",
            budget: Duration::from_secs(1),
            run: detection_budget,
        },
        Criterion {
            number: 4,
            name: "Langevin vs closed-form spectrum",
            budget: Duration::from_secs(60),
            run: langevin_oracle,
        },
        Criterion {
            number: 5,
            name: "eta_c from T_min vs effective rates",
            budget: Duration::from_secs(5),
            run: cross_oracle,
        },
        Criterion {
            number: 6,
            name: "crossing fitter recovery",
            budget: Duration::from_secs(10),
            run: fitter_recovery,
        },
        Criterion {
            number: 7,
            name: "shot-noise linearity",
            budget: Duration::from_secs(10),
            run: shot_noise_linearity,
        },
        Criterion {
            number: 8,
            name: "property suites",
            budget: Duration::from_secs(10),
            run: property_suites,
        },
        Criterion {
            number: 9,
            name: "determinism",
            budget: Duration::from_secs(120),
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (pass, detail) = match result {
            Ok(d) if in_time => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {} {} ({:.3} s): {}",
            c.number,
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
