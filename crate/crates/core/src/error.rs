use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration field violates its invariant. `field` is a dotted path
    /// such as `ring1.gamma_i`.
    #[error("{field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// A function argument is outside its domain.
    #[error("{name} = {value}: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no supermode branch within one linewidth of the dip at {omega} rad/s")]
    NoBranchMatch { omega: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),

    #[error("fit window contains {0} dips, expected one")]
    MultipleDips(usize),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
