//! Parameter estimation from resonance and transmission data.

pub mod crossing;
pub mod dip;
pub mod linear;
pub mod lm;

use alloc::vec::Vec;

pub use crossing::{
    auto_initial_guess, fit_avoided_crossing, CrossingDataset, CrossingParams, CrossingRow,
    FixedParams,
};
pub use dip::{fit_lorentzian_dip, DipFit, DipFitWarning};
pub use linear::{weighted_linear_fit, LinearFit};
pub use lm::{LeastSquaresProblem, LmOptions, LmReport};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub name: &'static str,
    pub value: f64,
    pub stderr: f64,
    /// Held at its initial value during the fit.
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<ParamEstimate>,
    /// RMS residual in the data's units.
    pub residual_rms: f64,
    pub converged: bool,
    pub n_iterations: usize,
    /// Objective at each accepted iterate (scaled units).
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&ParamEstimate> {
        self.params.iter().find(|p| p.name == name)
    }
}
