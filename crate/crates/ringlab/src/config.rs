//! TOML device description.
//!
//! Every scalar key carries its unit in the name. Frequencies and rates
//! given in MHz are ordinary frequencies and are multiplied by `2 pi` on
//! load, so `gamma_i_mhz = 2.114` is an energy decay rate of
//! `2 pi * 2.114e6` rad/s.
//!
//! ```toml
//! pump_wavelength_nm = 1561.1
//!
//! [ring1]
//! radius_um = 115.0
//! gamma_i_mhz = 2.114
//! detuning_mhz = 436.5      # zero-power resonance above the pump
//! # resonance_nm = 1561.096 # alternative to detuning_mhz
//!
//! [ring1.heater]
//! alpha_mhz_per_mw = 17.46
//! p_max_mw = 100.0
//!
//! [ring2]
//! # same keys as ring1
//!
//! [coupling]
//! kappa_ext_mhz = 5.168
//! kappa_12_mhz = 100.0
//!
//! [[detection.stages]]
//! name = "grating"
//! efficiency = 0.85
//!
//! [[detection.stages]]
//! name = "collection_lens"
//! loss_db = 0.7             # alternative to efficiency
//! ```

use std::fmt;
use std::path::Path;

use ringlab_core::device::{
    validate_config, CouplingParams, DetectionChain, DetectionStage, DeviceConfig, HeaterModel,
    RingLabel, RingParams, ValidatedConfig,
};
use ringlab_core::units::{mhz_to_rad_s, nm_to_rad_s};
use serde::Deserialize;

/// Bundled copy of `configs/default.toml`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    /// A key is missing, unknown, mistyped or has an invalid value.
    #[error("{key}: {message}")]
    Key { key: String, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    pump_wavelength_nm: f64,
    ring1: FileRing,
    ring2: FileRing,
    coupling: FileCoupling,
    detection: FileDetection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRing {
    radius_um: f64,
    gamma_i_mhz: f64,
    detuning_mhz: Option<f64>,
    resonance_nm: Option<f64>,
    heater: FileHeater,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileHeater {
    alpha_mhz_per_mw: f64,
    p_max_mw: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCoupling {
    kappa_ext_mhz: f64,
    kappa_12_mhz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDetection {
    stages: Vec<FileStage>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileStage {
    name: String,
    efficiency: Option<f64>,
    loss_db: Option<f64>,
}

fn key_error(key: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Key {
        key: key.into(),
        message: message.to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    1 + text[..offset.min(text.len())].matches('\n').count()
}

fn first_line(message: &str) -> String {
    message.lines().next().unwrap_or("").trim().to_string()
}

/// Splits a serde message such as ``missing field `x` `` into the key it
/// names.
fn named_field(message: &str) -> Option<&str> {
    let rest = message
        .strip_prefix("missing field `")
        .or_else(|| message.strip_prefix("unknown field `"))?;
    rest.split('`').next()
}

fn convert_ring(
    file: &FileRing,
    key: &str,
    label: RingLabel,
    pump: f64,
) -> Result<RingParams, ConfigError> {
    let omega0 = match (file.detuning_mhz, file.resonance_nm) {
        (Some(d), None) => pump + mhz_to_rad_s(d),
        (None, Some(nm)) => nm_to_rad_s(nm),
        (Some(_), Some(_)) => {
            return Err(key_error(
                format!("{key}.resonance_nm"),
                "give either detuning_mhz or resonance_nm, not both",
            ))
        }
        (None, None) => {
            return Err(key_error(
                format!("{key}.detuning_mhz"),
                "missing (or give resonance_nm)",
            ))
        }
    };
    Ok(RingParams {
        label,
        radius: file.radius_um,
        omega0,
        gamma_i: mhz_to_rad_s(file.gamma_i_mhz),
        heater: HeaterModel {
            alpha: mhz_to_rad_s(file.heater.alpha_mhz_per_mw),
            p_max: file.heater.p_max_mw,
        },
    })
}

/// File key for a field path reported by [`validate_config`].
fn file_key(field: &str, file: &FileConfig) -> String {
    let ring_key = |ring: &FileRing, rest: &str| -> String {
        match rest {
            "radius" => "radius_um".into(),
            "gamma_i" => "gamma_i_mhz".into(),
            "omega0" if ring.resonance_nm.is_some() => "resonance_nm".into(),
            "omega0" => "detuning_mhz".into(),
            "heater.alpha" => "heater.alpha_mhz_per_mw".into(),
            "heater.p_max" => "heater.p_max_mw".into(),
            other => other.into(),
        }
    };
    if let Some(rest) = field.strip_prefix("ring1.") {
        return format!("ring1.{}", ring_key(&file.ring1, rest));
    }
    if let Some(rest) = field.strip_prefix("ring2.") {
        return format!("ring2.{}", ring_key(&file.ring2, rest));
    }
    if let Some(rest) = field.strip_prefix("detection.stages[") {
        if let Some(i) = rest.split(']').next().and_then(|s| s.parse::<usize>().ok()) {
            let leaf = match file.detection.stages.get(i) {
                Some(s) if s.loss_db.is_some() => "loss_db",
                _ => "efficiency",
            };
            return format!("detection.stages[{i}].{leaf}");
        }
    }
    match field {
        "coupling.kappa_ext" => "coupling.kappa_ext_mhz".into(),
        "coupling.kappa_12" => "coupling.kappa_12_mhz".into(),
        "pump_wavelength" => "pump_wavelength_nm".into(),
        other => other.into(),
    }
}

fn convert(file: &FileConfig) -> Result<DeviceConfig, ConfigError> {
    if !(file.pump_wavelength_nm.is_finite() && file.pump_wavelength_nm > 0.0) {
        return Err(key_error(
            "pump_wavelength_nm",
            "pump wavelength must be positive",
        ));
    }
    let pump = nm_to_rad_s(file.pump_wavelength_nm);
    let mut stages = Vec::with_capacity(file.detection.stages.len());
    for (i, s) in file.detection.stages.iter().enumerate() {
        let stage = match (s.efficiency, s.loss_db) {
            (Some(e), None) => DetectionStage::new(s.name.clone(), e),
            (None, Some(l)) => DetectionStage::from_loss_db(s.name.clone(), l),
            (Some(_), Some(_)) => {
                return Err(key_error(
                    format!("detection.stages[{i}].loss_db"),
                    "give either efficiency or loss_db, not both",
                ))
            }
            (None, None) => {
                return Err(key_error(
                    format!("detection.stages[{i}].efficiency"),
                    "missing (or give loss_db)",
                ))
            }
        };
        stages.push(stage);
    }
    Ok(DeviceConfig {
        ring1: convert_ring(&file.ring1, "ring1", RingLabel::R1, pump)?,
        ring2: convert_ring(&file.ring2, "ring2", RingLabel::R2, pump)?,
        coupling: CouplingParams {
            kappa_ext: mhz_to_rad_s(file.coupling.kappa_ext_mhz),
            kappa_12: mhz_to_rad_s(file.coupling.kappa_12_mhz),
        },
        detection: DetectionChain { stages },
        pump_wavelength: file.pump_wavelength_nm,
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ValidatedConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: first_line(e.message()),
    })?;
    let file: FileConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = first_line(e.inner().message());
        match named_field(&message) {
            Some(field) => {
                let key = if path == "." || path.is_empty() {
                    field.to_string()
                } else if path.ends_with(field) {
                    path.clone()
                } else {
                    format!("{path}.{field}")
                };
                let what = if message.starts_with("missing") {
                    "missing".to_string()
                } else {
                    "unknown key".to_string()
                };
                key_error(key, what)
            }
            None => key_error(path, message),
        }
    })?;
    let config = convert(&file)?;
    validate_config(config).map_err(|e| match e {
        ringlab_core::Error::InvalidConfig { field, reason } => {
            key_error(file_key(&field, &file), reason)
        }
        other => key_error("config", other),
    })
}

pub fn load_config(path: &Path) -> Result<ValidatedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// The bundled default configuration.
pub fn default_config() -> ValidatedConfig {
    parse_config(DEFAULT_CONFIG_TOML).expect("bundled default config is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn replace(from: &str, to: &str) -> String {
        assert!(DEFAULT_CONFIG_TOML.contains(from), "{from}");
        DEFAULT_CONFIG_TOML.replacen(from, to, 1)
    }

    fn key_of(text: &str) -> String {
        match parse_config(text).unwrap_err() {
            ConfigError::Key { key, .. } => key,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bundled_default_matches_calibration() {
        let parsed = default_config();
        let reference = DeviceConfig::calibrated_default();
        let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-12;
        for (p, r) in [
            (&parsed.ring1, &reference.ring1),
            (&parsed.ring2, &reference.ring2),
        ] {
            assert!(close(p.omega0, r.omega0));
            assert!(close(p.gamma_i, r.gamma_i));
            assert!(close(p.heater.alpha, r.heater.alpha));
            assert_eq!(p.heater.p_max, r.heater.p_max);
            assert_eq!(p.radius, r.radius);
        }
        assert!(close(
            parsed.coupling.kappa_ext,
            reference.coupling.kappa_ext
        ));
        assert!(close(parsed.coupling.kappa_12, reference.coupling.kappa_12));
        assert!(close(parsed.eta_d(), 0.85 * 10f64.powf(-0.07) * 0.80));
    }

    #[test]
    fn missing_key_is_named() {
        assert_eq!(
            key_of(&replace("gamma_i_mhz = 2.114\n", "")),
            "ring1.gamma_i_mhz"
        );
        assert_eq!(
            key_of(&replace("kappa_12_mhz", "# kappa_12_mhz")),
            "coupling.kappa_12_mhz"
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let key = key_of(&replace("p_max_mw", "p_maximum_mw"));
        assert_eq!(key, "ring1.heater.p_maximum_mw");
        assert_eq!(
            key_of(&format!("extra = 1\n{DEFAULT_CONFIG_TOML}")),
            "extra"
        );
    }

    #[test]
    fn wrong_type_is_named() {
        assert_eq!(
            key_of(&replace("radius_um = 115.0", "radius_um = \"big\"")),
            "ring1.radius_um"
        );
    }

    #[test]
    fn invalid_value_is_named_by_file_key() {
        let idx = DEFAULT_CONFIG_TOML.rfind("gamma_i_mhz = 2.114").unwrap();
        let mut text = DEFAULT_CONFIG_TOML.to_string();
        text.replace_range(idx..idx + "gamma_i_mhz = 2.114".len(), "gamma_i_mhz = -1.0");
        assert_eq!(key_of(&text), "ring2.gamma_i_mhz");
        assert_eq!(
            key_of(&replace("efficiency = 0.85", "efficiency = 1.5")),
            "detection.stages[0].efficiency"
        );
        assert_eq!(
            key_of(&replace("loss_db = 0.7", "loss_db = -3.0")),
            "detection.stages[1].loss_db"
        );
    }

    #[test]
    fn resonance_given_twice() {
        let text = replace(
            "detuning_mhz = 436.5",
            "detuning_mhz = 436.5\nresonance_nm = 1561.0",
        );
        assert_eq!(key_of(&text), "ring1.resonance_nm");
        let text = replace("detuning_mhz = 436.5", "resonance_nm = 1561.0");
        let cfg = parse_config(&text).unwrap();
        assert!((cfg.ring1.omega0 - nm_to_rad_s(1561.0)).abs() < 1.0);
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("pump_wavelength_nm = 1561.1\n[ring1\n").unwrap_err();
        assert!(
            matches!(err, ConfigError::Syntax { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn missing_file() {
        let err = load_config(Path::new("/nonexistent/ringlab.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }
}
