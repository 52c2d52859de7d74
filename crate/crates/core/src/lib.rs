//! Model of a thermally tuned, coupled double-ring optical parametric
//! oscillator.
//!
//! Two microrings share an evanescent coupling `kappa_12`. Only the first
//! ring (R1) touches the bus waveguide. Detuning the rings with their heaters
//! moves the system along an avoided crossing. That redistributes the
//! supermode energy between the rings, and with it the bus coupling
//! efficiency `eta_c` and the intensity-difference squeezing available
//! above threshold.
//!
//! The crate is `no_std` (with `alloc`) so the physics can be embedded
//! anywhere. IO, configuration files and the command line live in the
//! `ringlab` crate.
//!
//! Conventions used throughout:
//!
//! * frequencies and rates are angular, in rad/s;
//! * every loss/coupling rate is an *energy* (photon-number) decay rate, so
//!   amplitudes decay at half the rate and the photon lifetime is the inverse
//!   of the total rate;
//! * decibels are always `10 log10` of a power ratio.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod device;
pub mod error;
mod fft;
pub mod fit;
pub mod langevin;
mod linalg;
pub mod spectra;
pub mod squeezing;
pub mod supermodes;
pub mod units;

pub use device::{
    detection_efficiency, heater_detuning, validate_config, CouplingParams, DetectionChain,
    DetectionStage, DeviceConfig, HeaterModel, RingLabel, RingParams, ValidatedConfig,
};
pub use error::{Error, Result};
pub use supermodes::{Branch, SupermodeSolution};
