use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};
use ringlab_core::fit::{
    fit_avoided_crossing, weighted_linear_fit, CrossingDataset, CrossingParams, CrossingRow,
    FixedParams, LmOptions,
};
use ringlab_core::units::mhz_to_rad_s;
use ringlab_core::Branch;

fn truth() -> CrossingParams {
    let base = 1.2066e15;
    CrossingParams {
        kappa_12: mhz_to_rad_s(100.0),
        omega1_0: base + mhz_to_rad_s(436.5),
        omega2_0: base + mhz_to_rad_s(174.6),
        alpha1: mhz_to_rad_s(17.46),
        alpha2: mhz_to_rad_s(15.0),
    }
}

/// `settings` heater points through the crossing, both branches each.
/// `p2` wanders independently of `p1` so both tuning rates are
/// identifiable.
fn dataset(p: &CrossingParams, settings: usize, sigma: f64, seed: u64) -> CrossingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    for i in 0..settings {
        let p1 = 50.0 * i as f64 / (settings - 1) as f64;
        let p2 = 10.0 + 4.0 * ((i * 7) % settings) as f64 / settings as f64;
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
                resonance: p.predict(b, p1, p2) + e,
            });
        }
    }
    CrossingDataset::new(rows).unwrap()
}

fn fit(data: &CrossingDataset, initial: Option<CrossingParams>) -> (CrossingParams, f64) {
    let r =
        fit_avoided_crossing(data, initial, FixedParams::default(), &LmOptions::default()).unwrap();
    let se = r.get("kappa_12").unwrap().stderr;
    (r.crossing_params().unwrap(), se)
}

#[test]
fn stderr_matches_monte_carlo_spread() {
    let t = truth();
    let sigma = 0.01 * t.kappa_12;
    let runs: Vec<(f64, f64)> = (0..100)
        .map(|seed| {
            let (p, se) = fit(&dataset(&t, 15, sigma, seed), None);
            (p.kappa_12, se)
        })
        .collect();
    let within = runs
        .iter()
        .filter(|(k, se)| (k - t.kappa_12).abs() <= 3.0 * se)
        .count();
    assert!(within >= 95, "{within}/100 within 3 stderr");

    let mean = runs.iter().map(|r| r.0).sum::<f64>() / 100.0;
    let spread = (runs.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
    let typical_se = runs.iter().map(|r| r.1).sum::<f64>() / 100.0;
    let ratio = typical_se / spread;
    assert!((0.5..=2.0).contains(&ratio), "stderr/spread = {ratio}");
}

#[test]
fn recovery_converges_with_small_noise() {
    let t = truth();
    let (p, _) = fit(&dataset(&t, 50, 1e-4 * t.kappa_12, 11), None);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    assert!(rel(p.kappa_12, t.kappa_12) < 1e-3);
    assert!(rel(p.alpha1, t.alpha1) < 1e-3);
    assert!(rel(p.alpha2, t.alpha2) < 1e-3);
    assert!((p.omega1_0 - t.omega1_0).abs() < 1e-3 * t.kappa_12);
    assert!((p.omega2_0 - t.omega2_0).abs() < 1e-3 * t.kappa_12);
}

#[test]
fn shift_moves_only_the_bare_frequencies() {
    let t = truth();
    let data = dataset(&t, 15, 0.01 * t.kappa_12, 5);
    let delta = mhz_to_rad_s(1000.0);
    let shifted = CrossingDataset::new(
        data.rows()
            .iter()
            .map(|r| CrossingRow {
                resonance: r.resonance + delta,
                ..*r
            })
            .collect(),
    )
    .unwrap();
    let guess = CrossingParams {
        kappa_12: 0.8 * t.kappa_12,
        alpha1: 1.1 * t.alpha1,
        alpha2: 0.9 * t.alpha2,
        ..t
    };
    let moved = CrossingParams {
        omega1_0: guess.omega1_0 + delta,
        omega2_0: guess.omega2_0 + delta,
        ..guess
    };
    let (a, _) = fit(&data, Some(guess));
    let (b, _) = fit(&shifted, Some(moved));
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    assert!(rel(b.kappa_12, a.kappa_12) < 1e-9);
    assert!(rel(b.alpha1, a.alpha1) < 1e-9);
    assert!(rel(b.alpha2, a.alpha2) < 1e-9);
    assert!((b.omega1_0 - a.omega1_0 - delta).abs() < 1e-9 * a.kappa_12);
    assert!((b.omega2_0 - a.omega2_0 - delta).abs() < 1e-9 * a.kappa_12);
}

#[test]
fn noisy_line_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let x: Vec<f64> = (0..40).map(|i| i as f64 / 10.0).collect();
    let y: Vec<f64> = x.iter().map(|&v| v + noise.sample(&mut rng)).collect();
    let f = weighted_linear_fit(&x, &y, None, false).unwrap();
    assert!(f.r_squared < 1.0);
    assert!((f.slope - 1.0).abs() < 3.0 * f.slope_stderr);
}
