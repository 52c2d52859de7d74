//! Supermodes of the two coupled rings.
//!
//! The lossless coupling matrix `[[w1, k12], [k12, w2]]` is diagonalized in
//! closed form. Losses enter afterwards through first-order perturbation:
//! only R1 sees the bus, so the external rate of a supermode scales with its
//! R1 energy fraction, while intrinsic loss is the fraction-weighted average.

use alloc::vec::Vec;

use crate::device::ValidatedConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        }
    }
}

impl core::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upper" | "+" => Ok(Branch::Upper),
            "lower" | "-" => Ok(Branch::Lower),
            _ => Err(Error::InvalidInput(alloc::format!(
                "unknown branch '{s}', expected upper or lower"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupermodeSolution {
    pub branch: Branch,
    /// Eigenfrequency, rad/s.
    pub omega: f64,
    /// Energy fraction in R1.
    pub frac1: f64,
    /// Energy fraction in R2.
    pub frac2: f64,
    pub kappa_eff: f64,
    pub gamma_eff: f64,
    pub eta_c: f64,
    /// Photon lifetime, s.
    pub tau_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub kappa_eff: f64,
    pub gamma_eff: f64,
    pub eta_c: f64,
    pub tau_c: f64,
}

fn check_kappa(kappa_12: f64) -> Result<()> {
    if !(kappa_12 > 0.0) || !kappa_12.is_finite() {
        return Err(Error::OutOfRange {
            name: "kappa_12",
            value: kappa_12,
            reason: "ring-ring coupling must be positive",
        });
    }
    Ok(())
}

/// Eigenfrequencies `(omega_plus, omega_minus)` of the coupled rings:
/// `(w1 + w2)/2 +- sqrt(((w1 - w2)/2)^2 + k12^2)`.
pub fn supermode_frequencies(omega1: f64, omega2: f64, kappa_12: f64) -> Result<(f64, f64)> {
    check_kappa(kappa_12)?;
    let mean = 0.5 * (omega1 + omega2);
    let half_split = libm::hypot(0.5 * (omega1 - omega2), kappa_12);
    Ok((mean + half_split, mean - half_split))
}

/// Energy fractions `(frac1, frac2)` of the given branch.
///
/// The lower branch is R1-like when R1 sits below R2 (`omega1 << omega2`)
/// and R2-like in the opposite limit.
pub fn supermode_vectors(
    omega1: f64,
    omega2: f64,
    kappa_12: f64,
    branch: Branch,
) -> Result<(f64, f64)> {
    check_kappa(kappa_12)?;
    let delta = 0.5 * (omega1 - omega2);
    let r = libm::hypot(delta, kappa_12);
    // (1 - delta/r)/2 and (1 + delta/r)/2, each written without cancellation.
    let k2 = kappa_12 * kappa_12;
    let (small, large) = if delta >= 0.0 {
        (k2 / (2.0 * r * (r + delta)), (r + delta) / (2.0 * r))
    } else {
        ((r - delta) / (2.0 * r), k2 / (2.0 * r * (r - delta)))
    };
    // small = (1 - delta/r)/2, large = (1 + delta/r)/2
    Ok(match branch {
        Branch::Lower => (small, large),
        Branch::Upper => (large, small),
    })
}

/// Loss rates of a supermode with R1 fraction `frac1`.
pub fn effective_rates(
    frac1: f64,
    frac2: f64,
    kappa_ext: f64,
    gamma1: f64,
    gamma2: f64,
) -> Result<EffectiveRates> {
    if !(0.0..=1.0).contains(&frac1) || !(0.0..=1.0).contains(&frac2) {
        return Err(Error::OutOfRange {
            name: "frac1",
            value: frac1,
            reason: "energy fractions must lie in [0, 1]",
        });
    }
    if (frac1 + frac2 - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange {
            name: "frac1 + frac2",
            value: frac1 + frac2,
            reason: "energy fractions must sum to one",
        });
    }
    for (name, v) in [
        ("kappa_ext", kappa_ext),
        ("gamma1", gamma1),
        ("gamma2", gamma2),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::OutOfRange {
                name,
                value: v,
                reason: "rate must be positive",
            });
        }
    }
    let kappa_eff = frac1 * kappa_ext;
    let gamma_eff = frac1 * gamma1 + frac2 * gamma2;
    let total = kappa_eff + gamma_eff;
    Ok(EffectiveRates {
        kappa_eff,
        gamma_eff,
        eta_c: kappa_eff / total,
        tau_c: 1.0 / total,
    })
}

/// Full supermode solution at heater powers `(p1, p2)` mW.
pub fn solve(
    config: &ValidatedConfig,
    branch: Branch,
    p1: f64,
    p2: f64,
) -> Result<SupermodeSolution> {
    let (w1, w2) = config.ring_frequencies(p1, p2)?;
    solve_at(config, branch, w1, w2)
}

/// Supermode solution for given bare ring frequencies.
pub fn solve_at(
    config: &ValidatedConfig,
    branch: Branch,
    omega1: f64,
    omega2: f64,
) -> Result<SupermodeSolution> {
    let k12 = config.coupling.kappa_12;
    let (plus, minus) = supermode_frequencies(omega1, omega2, k12)?;
    let (frac1, frac2) = supermode_vectors(omega1, omega2, k12, branch)?;
    let rates = effective_rates(
        frac1,
        frac2,
        config.coupling.kappa_ext,
        config.ring1.gamma_i,
        config.ring2.gamma_i,
    )?;
    Ok(SupermodeSolution {
        branch,
        omega: match branch {
            Branch::Upper => plus,
            Branch::Lower => minus,
        },
        frac1,
        frac2,
        kappa_eff: rates.kappa_eff,
        gamma_eff: rates.gamma_eff,
        eta_c: rates.eta_c,
        tau_c: rates.tau_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p1: f64,
    pub omega: f64,
    pub eta_c: f64,
    pub tau_c: f64,
}

/// `eta_c` and `tau_c` along one branch while the R1 heater is swept and R2
/// is held at `p2`.
pub fn eta_c_vs_heater(
    config: &ValidatedConfig,
    branch: Branch,
    p1_grid: &[f64],
    p2: f64,
) -> Result<Vec<SweepPoint>> {
    p1_grid
        .iter()
        .map(|&p1| {
            let s = solve(config, branch, p1, p2)?;
            Ok(SweepPoint {
                p1,
                omega: s.omega,
                eta_c: s.eta_c,
                tau_c: s.tau_c,
            })
        })
        .collect()
}
