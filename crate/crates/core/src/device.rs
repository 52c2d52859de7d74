//! Physical parameters of the double-ring device and its detection chain.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::units::{loss_db_to_efficiency, mhz_to_rad_s, nm_to_rad_s};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingLabel {
    R1,
    R2,
}

impl RingLabel {
    fn key(self) -> &'static str {
        match self {
            RingLabel::R1 => "ring1",
            RingLabel::R2 => "ring2",
        }
    }
}

/// Linear thermo-optic tuner. Positive power red-shifts the ring, i.e. the
/// resonance frequency drops by `alpha` rad/s per mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeaterModel {
    /// rad/s per mW.
    pub alpha: f64,
    /// mW.
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    pub label: RingLabel,
    /// Micrometers.
    pub radius: f64,
    /// Resonance at zero heater power, rad/s.
    pub omega0: f64,
    /// Intrinsic energy decay rate, rad/s.
    pub gamma_i: f64,
    pub heater: HeaterModel,
}

impl RingParams {
    /// Resonance frequency with `power` mW on the heater.
    pub fn frequency_at(&self, power: f64) -> Result<f64> {
        Ok(self.omega0 + heater_detuning(&self.heater, power)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Bus to R1 external energy decay rate, rad/s.
    pub kappa_ext: f64,
    /// Ring to ring coupling coefficient, rad/s.
    pub kappa_12: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionStage {
    pub name: String,
    pub efficiency: f64,
}

impl DetectionStage {
    pub fn new(name: impl Into<String>, efficiency: f64) -> Self {
        Self {
            name: name.into(),
            efficiency,
        }
    }

    /// Stage specified by its insertion loss in dB.
    pub fn from_loss_db(name: impl Into<String>, loss_db: f64) -> Self {
        Self::new(name, loss_db_to_efficiency(loss_db))
    }
}

/// Ordered losses between the chip and the photocurrent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionChain {
    pub stages: Vec<DetectionStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    pub ring1: RingParams,
    pub ring2: RingParams,
    pub coupling: CouplingParams,
    pub detection: DetectionChain,
    /// nm.
    pub pump_wavelength: f64,
}

/// Default pump wavelength, nm.
pub const PUMP_WAVELENGTH_NM: f64 = 1561.1;
/// Ring radius of the reference device, micrometers.
pub const RING_RADIUS_UM: f64 = 115.0;

impl DeviceConfig {
    /// Calibrated reference device.
    ///
    /// Loss and coupling rates are not measured values. They are chosen so
    /// that the lower branch, swept over 0..=50 mW on the R1 heater with
    /// 10 mW on R2, spans `eta_c` from 0.10 to 0.70 and so that the photon
    /// lifetime at `eta_c = 0.70` is about 22.6 ns:
    ///
    /// | quantity          | value / 2 pi |
    /// |-------------------|--------------|
    /// | `gamma_i` (both)  | 2.114 MHz    |
    /// | `kappa_ext`       | 5.168 MHz    |
    /// | `kappa_12`        | 100 MHz      |
    /// | heater `alpha`    | 17.46 MHz/mW |
    ///
    /// R1 sits 436.5 MHz and R2 174.6 MHz above the pump at zero heater
    /// power, which puts the crossing at `p1 = 25 mW` when `p2 = 10 mW`.
    pub fn calibrated_default() -> Self {
        let pump = nm_to_rad_s(PUMP_WAVELENGTH_NM);
        let heater = HeaterModel {
            alpha: mhz_to_rad_s(17.46),
            p_max: 100.0,
        };
        let ring = |label, offset_mhz: f64| RingParams {
            label,
            radius: RING_RADIUS_UM,
            omega0: pump + mhz_to_rad_s(offset_mhz),
            gamma_i: mhz_to_rad_s(2.114),
            heater,
        };
        DeviceConfig {
            ring1: ring(RingLabel::R1, 436.5),
            ring2: ring(RingLabel::R2, 174.6),
            coupling: CouplingParams {
                kappa_ext: mhz_to_rad_s(5.168),
                kappa_12: mhz_to_rad_s(100.0),
            },
            detection: DetectionChain {
                stages: vec![
                    DetectionStage::new("grating", 0.85),
                    DetectionStage::from_loss_db("collection_lens", 0.7),
                    DetectionStage::new("photodiode_qe", 0.80),
                ],
            },
            pump_wavelength: PUMP_WAVELENGTH_NM,
        }
    }

    pub fn pump_omega(&self) -> f64 {
        nm_to_rad_s(self.pump_wavelength)
    }

    pub fn ring(&self, label: RingLabel) -> &RingParams {
        match label {
            RingLabel::R1 => &self.ring1,
            RingLabel::R2 => &self.ring2,
        }
    }
}

/// A [`DeviceConfig`] that passed [`validate_config`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(DeviceConfig);

impl ValidatedConfig {
    pub fn get(&self) -> &DeviceConfig {
        &self.0
    }

    pub fn into_inner(self) -> DeviceConfig {
        self.0
    }

    /// Composite detection efficiency of the validated chain.
    pub fn eta_d(&self) -> f64 {
        detection_efficiency(&self.0.detection)
    }

    /// Heater-shifted resonances `(omega1, omega2)`.
    pub fn ring_frequencies(&self, p1: f64, p2: f64) -> Result<(f64, f64)> {
        let w1 = self
            .0
            .ring1
            .frequency_at(p1)
            .map_err(|e| tag_power(e, "p1"))?;
        let w2 = self
            .0
            .ring2
            .frequency_at(p2)
            .map_err(|e| tag_power(e, "p2"))?;
        Ok((w1, w2))
    }
}

fn tag_power(err: Error, name: &'static str) -> Error {
    match err {
        Error::OutOfRange { value, reason, .. } => Error::OutOfRange {
            name,
            value,
            reason,
        },
        other => other,
    }
}

impl core::ops::Deref for ValidatedConfig {
    type Target = DeviceConfig;

    fn deref(&self) -> &DeviceConfig {
        &self.0
    }
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn check_ring(ring: &RingParams, expected: RingLabel) -> Result<()> {
    let key = expected.key();
    if ring.label != expected {
        return Err(Error::config(
            format!("{key}.label"),
            format!("expected {expected:?}"),
        ));
    }
    if !positive_finite(ring.radius) {
        return Err(Error::config(
            format!("{key}.radius"),
            "radius must be positive",
        ));
    }
    if !positive_finite(ring.omega0) {
        return Err(Error::config(
            format!("{key}.omega0"),
            "resonance frequency must be positive",
        ));
    }
    if !positive_finite(ring.gamma_i) {
        return Err(Error::config(
            format!("{key}.gamma_i"),
            "intrinsic loss must be positive",
        ));
    }
    if !ring.heater.alpha.is_finite() {
        return Err(Error::config(
            format!("{key}.heater.alpha"),
            "tuning coefficient must be finite",
        ));
    }
    if !positive_finite(ring.heater.p_max) {
        return Err(Error::config(
            format!("{key}.heater.p_max"),
            "maximum heater power must be positive",
        ));
    }
    Ok(())
}

/// Checks every invariant of the configuration and reports the first
/// violation with its field path.
pub fn validate_config(config: DeviceConfig) -> Result<ValidatedConfig> {
    check_ring(&config.ring1, RingLabel::R1)?;
    check_ring(&config.ring2, RingLabel::R2)?;
    if !positive_finite(config.coupling.kappa_ext) {
        return Err(Error::config(
            "coupling.kappa_ext",
            "bus coupling rate must be positive",
        ));
    }
    if !positive_finite(config.coupling.kappa_12) {
        return Err(Error::config(
            "coupling.kappa_12",
            "ring-ring coupling must be positive",
        ));
    }
    for (i, stage) in config.detection.stages.iter().enumerate() {
        let e = stage.efficiency;
        if !(e.is_finite() && e > 0.0 && e <= 1.0) {
            return Err(Error::config(
                format!("detection.stages[{i}].efficiency"),
                format!("stage '{}' efficiency {e} not in (0, 1]", stage.name),
            ));
        }
    }
    if !positive_finite(config.pump_wavelength) {
        return Err(Error::config(
            "pump_wavelength",
            "pump wavelength must be positive",
        ));
    }
    Ok(ValidatedConfig(config))
}

/// Frequency shift produced by `power` mW: `-alpha * power`.
pub fn heater_detuning(heater: &HeaterModel, power: f64) -> Result<f64> {
    if !(power >= 0.0 && power <= heater.p_max) {
        return Err(Error::OutOfRange {
            name: "heater power",
            value: power,
            reason: "outside [0, p_max]",
        });
    }
    Ok(-heater.alpha * power)
}

/// Product of all stage efficiencies.
pub fn detection_efficiency(chain: &DetectionChain) -> f64 {
    chain.stages.iter().map(|s| s.efficiency).product()
}
