//! Intensity-difference noise of the above-threshold twin beams, normalized
//! to shot noise:
//!
//! ```text
//! S(W) = 1 - eta_c * eta_d / (1 + W^2 tau_c^2)
//! ```
//!
//! Values below one are squeezed. Internally squeezing is a negative dB
//! number; the "squeezing factor" quoted in prose is its magnitude.

use alloc::vec::Vec;

use crate::device::ValidatedConfig;
use crate::error::{Error, Result};
use crate::supermodes::{eta_c_vs_heater, Branch};
pub use crate::units::{db, undb};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// After the detection chain.
    Measured,
    /// At the chip output, `eta_d = 1`.
    OnChip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingPoint {
    /// Sideband angular frequency, rad/s.
    pub omega_sideband: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub tau_c: f64,
    pub s_linear: f64,
    /// `10 log10(s_linear)`; `-inf` for perfect squeezing.
    pub s_db: f64,
    pub kind: PointKind,
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange {
            name,
            value: v,
            reason: "efficiency must lie in [0, 1]",
        });
    }
    Ok(())
}

fn check_tau(tau_c: f64) -> Result<()> {
    if !(tau_c > 0.0) || !tau_c.is_finite() {
        return Err(Error::OutOfRange {
            name: "tau_c",
            value: tau_c,
            reason: "photon lifetime must be positive",
        });
    }
    Ok(())
}

/// Cavity roll-off `1 / (1 + (W tau_c)^2)`.
pub fn rolloff(omega_tau: f64) -> f64 {
    1.0 / (1.0 + omega_tau * omega_tau)
}

/// Linear noise level at one sideband frequency.
pub fn squeezing_level(eta_c: f64, eta_d: f64, tau_c: f64, omega_sideband: f64) -> Result<f64> {
    check_unit("eta_c", eta_c)?;
    check_unit("eta_d", eta_d)?;
    check_tau(tau_c)?;
    if !omega_sideband.is_finite() {
        return Err(Error::OutOfRange {
            name: "omega_sideband",
            value: omega_sideband,
            reason: "sideband frequency must be finite",
        });
    }
    Ok(1.0 - eta_c * eta_d * rolloff(omega_sideband * tau_c))
}

pub fn squeezing_spectrum(
    eta_c: f64,
    eta_d: f64,
    tau_c: f64,
    omega_grid: &[f64],
) -> Result<Vec<SqueezingPoint>> {
    let kind = if eta_d == 1.0 {
        PointKind::OnChip
    } else {
        PointKind::Measured
    };
    omega_grid
        .iter()
        .map(|&omega| {
            let s = squeezing_level(eta_c, eta_d, tau_c, omega)?;
            Ok(SqueezingPoint {
                omega_sideband: omega,
                eta_c,
                eta_d,
                tau_c,
                s_linear: s,
                s_db: 10.0 * libm::log10(s),
                kind,
            })
        })
        .collect()
}

/// Removes the detection chain from a measured noise level:
/// `1 - (1 - s_measured) / eta_d`.
///
/// The cavity roll-off is common to both levels and cancels, so
/// `omega_tau` only enters through its validation.
pub fn infer_onchip(s_measured: f64, eta_d: f64, omega_tau: f64) -> Result<f64> {
    if !(eta_d > 0.0 && eta_d <= 1.0) {
        return Err(Error::OutOfRange {
            name: "eta_d",
            value: eta_d,
            reason: "detection efficiency must lie in (0, 1]",
        });
    }
    if !(omega_tau >= 0.0) || !omega_tau.is_finite() {
        return Err(Error::OutOfRange {
            name: "omega_tau",
            value: omega_tau,
            reason: "must be a nonnegative finite product",
        });
    }
    if !(s_measured <= 1.0) {
        return Err(Error::OutOfRange {
            name: "s_measured",
            value: s_measured,
            reason: "above shot noise, nothing to infer",
        });
    }
    if !(s_measured > 1.0 - eta_d) {
        return Err(Error::OutOfRange {
            name: "s_measured",
            value: s_measured,
            reason: "unphysical: implies eta_c * L > 1 for this eta_d",
        });
    }
    Ok(1.0 - (1.0 - s_measured) / eta_d)
}

/// Coupling efficiency implied by a measured level, undoing both the
/// detection chain and the cavity roll-off.
pub fn infer_eta_c(s_measured: f64, eta_d: f64, omega_tau: f64) -> Result<f64> {
    let onchip = infer_onchip(s_measured, eta_d, omega_tau)?;
    Ok((1.0 - onchip) / rolloff(omega_tau))
}

/// Photon lifetime at which the level at `omega_sideband` equals `s_target`.
pub fn solve_tau_c(eta_c: f64, eta_d: f64, s_target: f64, omega_sideband: f64) -> Result<f64> {
    check_unit("eta_c", eta_c)?;
    check_unit("eta_d", eta_d)?;
    let depth = eta_c * eta_d;
    if !(s_target >= 1.0 - depth && s_target < 1.0) {
        return Err(Error::OutOfRange {
            name: "s_target",
            value: s_target,
            reason: "not reachable for these efficiencies",
        });
    }
    if !(omega_sideband > 0.0) {
        return Err(Error::OutOfRange {
            name: "omega_sideband",
            value: omega_sideband,
            reason: "must be positive to fix tau_c",
        });
    }
    // depth / (1 + x^2) = 1 - s_target
    let x2 = depth / (1.0 - s_target) - 1.0;
    Ok(libm::sqrt(x2.max(0.0)) / omega_sideband)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSweepRow {
    pub p1: f64,
    pub eta_c: f64,
    pub tau_c: f64,
    pub omega_sideband: f64,
    pub s_measured_db: f64,
    pub s_onchip_db: f64,
}

/// Measured (config `eta_d`) and on-chip (`eta_d = 1`) squeezing along a
/// heater sweep, ordered by `eta_c`.
pub fn squeezing_vs_coupling(
    config: &ValidatedConfig,
    branch: Branch,
    p1_grid: &[f64],
    p2: f64,
    omega_sideband: f64,
) -> Result<Vec<CouplingSweepRow>> {
    let eta_d = config.eta_d();
    let mut rows = eta_c_vs_heater(config, branch, p1_grid, p2)?
        .into_iter()
        .map(|p| {
            let measured = squeezing_level(p.eta_c, eta_d, p.tau_c, omega_sideband)?;
            let onchip = squeezing_level(p.eta_c, 1.0, p.tau_c, omega_sideband)?;
            Ok(CouplingSweepRow {
                p1: p.p1,
                eta_c: p.eta_c,
                tau_c: p.tau_c,
                omega_sideband,
                s_measured_db: db(measured)?,
                s_onchip_db: db(onchip)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.eta_c.total_cmp(&b.eta_c).then(a.p1.total_cmp(&b.p1)));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{validate_config, DeviceConfig};
    use crate::units::hz_to_rad_s;

    #[test]
    fn spectrum_limits() {
        let p = squeezing_spectrum(1.0, 1.0, 1e-8, &[0.0]).unwrap();
        assert_eq!(p[0].s_linear, 0.0);
        assert_eq!(p[0].kind, PointKind::OnChip);
        let far = squeezing_level(0.7, 0.6, 1e-8, 1e15).unwrap();
        assert!((far - 1.0).abs() < 1e-12);
        let none = squeezing_spectrum(0.7, 0.0, 1e-8, &[0.0, 1e7, 1e9]).unwrap();
        assert!(none
            .iter()
            .all(|p| p.s_linear == 1.0 && p.kind == PointKind::Measured));
    }

    #[test]
    fn overcoupled_measured_example() {
        let s = squeezing_level(0.7, 0.6, 1e-8, 0.0).unwrap();
        assert!((s - 0.58).abs() < 1e-15);
        assert!((db(s).unwrap() + 2.37).abs() < 0.005);
    }

    #[test]
    fn spectrum_rejects_out_of_range() {
        assert!(squeezing_spectrum(1.2, 0.5, 1e-8, &[0.0]).is_err());
        assert!(squeezing_spectrum(0.5, -0.1, 1e-8, &[0.0]).is_err());
        assert!(squeezing_spectrum(0.5, 0.5, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn db_round_trip() {
        for x in [1e-6, 0.1, 0.407, 0.5, 1.0, 3.0] {
            let back = undb(db(x).unwrap());
            assert!(((back - x) / x).abs() < 1e-12);
        }
    }

    #[test]
    fn infer_onchip_examples() {
        assert_eq!(infer_onchip(1.0, 0.6, 0.4).unwrap(), 1.0);
        let measured = undb(-2.0);
        let s = infer_onchip(measured, 0.5787, 0.42).unwrap();
        assert!((s - 0.362).abs() < 5e-4, "{s}");
        assert!((db(s).unwrap() + 4.4).abs() < 0.05);
        let s = infer_onchip(measured, 0.60, 0.42).unwrap();
        assert!((s - 0.385).abs() < 5e-4, "{s}");
        assert!((db(s).unwrap() + 4.1).abs() < 0.05);
        let s = infer_onchip(1.0 - 0.6 + 1e-6, 0.6, 0.0).unwrap();
        assert!((0.0..1e-5).contains(&s));
    }

    #[test]
    fn infer_onchip_rejects_unphysical() {
        assert!(infer_onchip(0.4, 0.6, 0.0).is_err());
        assert!(infer_onchip(0.3, 0.6, 0.0).is_err());
        assert!(infer_onchip(1.1, 0.6, 0.0).is_err());
        assert!(infer_onchip(0.9, 0.0, 0.0).is_err());
    }

    #[test]
    fn eta_c_recovered_through_rolloff() {
        let (eta_c, eta_d, tau) = (0.55, 0.6, 30e-9);
        let w = hz_to_rad_s(3e6);
        let s = squeezing_level(eta_c, eta_d, tau, w).unwrap();
        let back = infer_eta_c(s, eta_d, w * tau).unwrap();
        assert!((back - eta_c).abs() < 1e-12);
    }

    #[test]
    fn tau_c_solution_reproduces_target() {
        let w = hz_to_rad_s(3e6);
        let target = undb(-3.9);
        let tau = solve_tau_c(0.7, 1.0, target, w).unwrap();
        let s = squeezing_level(0.7, 1.0, tau, w).unwrap();
        assert!((s - target).abs() < 1e-12);
        assert!(solve_tau_c(0.7, 1.0, 0.2, w).is_err());
    }

    #[test]
    fn coupling_sweep_curves() {
        let cfg = validate_config(DeviceConfig::calibrated_default()).unwrap();
        let grid: Vec<f64> = (0..=50).map(f64::from).collect();
        let w = hz_to_rad_s(3e6);
        let rows = squeezing_vs_coupling(&cfg, Branch::Lower, &grid, 10.0, w).unwrap();
        assert!(rows.windows(2).all(|r| r[1].eta_c >= r[0].eta_c));
        assert!(rows
            .windows(2)
            .all(|r| r[1].s_measured_db < r[0].s_measured_db));
        assert!(rows.windows(2).all(|r| r[1].s_onchip_db < r[0].s_onchip_db));
        let top = rows.last().unwrap();
        assert!((top.eta_c - 0.70).abs() < 0.005);
        assert!((top.s_onchip_db + 3.9).abs() < 0.3, "{}", top.s_onchip_db);
        assert!(
            (top.s_measured_db + 2.0).abs() < 0.4,
            "{}",
            top.s_measured_db
        );
    }

    #[test]
    fn unit_detection_collapses_curves() {
        let mut raw = DeviceConfig::calibrated_default();
        raw.detection.stages.clear();
        let cfg = validate_config(raw).unwrap();
        let rows =
            squeezing_vs_coupling(&cfg, Branch::Lower, &[0.0, 25.0, 50.0], 10.0, 1e7).unwrap();
        assert!(rows.iter().all(|r| r.s_measured_db == r.s_onchip_db));
    }

    #[test]
    fn zero_coupling_is_shot_noise() {
        let s = squeezing_level(0.0, 0.6, 2e-8, 1e7).unwrap();
        assert_eq!(db(s).unwrap(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn inversion_round_trip(
                eta_c in 0.0f64..0.99,
                eta_d in 0.05f64..=1.0,
                tau in 1e-9f64..1e-7,
                w in 0.0f64..1e9,
            ) {
                let measured = squeezing_level(eta_c, eta_d, tau, w).unwrap();
                let onchip = squeezing_level(eta_c, 1.0, tau, w).unwrap();
                prop_assume!(measured > 1.0 - eta_d);
                let inferred = infer_onchip(measured, eta_d, w * tau).unwrap();
                prop_assert!(((inferred - onchip) / onchip).abs() < 1e-12);
            }

            #[test]
            fn bounded_below_and_monotone(
                eta_c in 0.0f64..=1.0,
                eta_d in 0.0f64..=1.0,
                tau in 1e-9f64..1e-7,
                w in 1.0f64..1e9,
            ) {
                let s = squeezing_level(eta_c, eta_d, tau, w).unwrap();
                let floor = 1.0 - eta_c * eta_d;
                prop_assert!(s >= floor);
                if eta_c * eta_d > 0.0 {
                    prop_assert!(s > floor);
                    prop_assert!(s < 1.0);
                }
                prop_assert_eq!(squeezing_level(eta_c, eta_d, tau, 0.0).unwrap(), floor);
                // finite-difference partial derivatives
                let h = 1e-6;
                let dw = squeezing_level(eta_c, eta_d, tau, w * (1.0 + h)).unwrap() - s;
                prop_assert!(dw >= -1e-15);
                if eta_c + h <= 1.0 {
                    prop_assert!(squeezing_level(eta_c + h, eta_d, tau, w).unwrap() - s <= 1e-15);
                }
                if eta_d + h <= 1.0 {
                    prop_assert!(squeezing_level(eta_c, eta_d + h, tau, w).unwrap() - s <= 1e-15);
                }
            }
        }
    }
}
