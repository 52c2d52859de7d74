//! Unit conversions applied at the boundaries. Internally everything is SI
//! with angular frequencies.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad_s(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

pub fn rad_s_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

pub fn ghz_to_rad_s(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e9
}

pub fn hz_to_rad_s(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn rad_s_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Vacuum wavelength in nm to angular frequency, `2 pi c / lambda`.
pub fn nm_to_rad_s(nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (nm * 1e-9)
}

pub fn rad_s_to_nm(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e9
}

/// Power ratio to dB.
pub fn db(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::OutOfRange {
            name: "ratio",
            value: ratio,
            reason: "dB conversion needs a positive finite power ratio",
        });
    }
    Ok(10.0 * libm::log10(ratio))
}

/// dB to power ratio.
pub fn undb(decibels: f64) -> f64 {
    libm::pow(10.0, decibels / 10.0)
}

/// Transmission of a stage with the given insertion loss in dB.
pub fn loss_db_to_efficiency(loss_db: f64) -> f64 {
    undb(-loss_db)
}
