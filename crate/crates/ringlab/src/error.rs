use std::fmt;

use crate::config::ConfigError;
use crate::table::CsvError;

/// Failure class; determines the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad command line or an argument outside its valid domain.
    Usage,
    /// Unreadable or invalid configuration file.
    Config,
    /// Unreadable or malformed data file, or data that violates a
    /// command's preconditions. Also output write failures.
    Data,
    /// A fit or simulation check failed.
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Config => 3,
            ErrorKind::Data => 4,
            ErrorKind::Numeric => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn data(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn numeric(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Numeric, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// `error[kind]: message` on a single line.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("error[{}]: {}", self.kind.as_str(), flat.join(" "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(ErrorKind::Config, e)
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        Self::new(ErrorKind::Data, e)
    }
}

impl From<ringlab_core::Error> for CliError {
    fn from(e: ringlab_core::Error) -> Self {
        use ringlab_core::Error as E;
        let kind = match &e {
            E::InvalidConfig { .. } => ErrorKind::Config,
            E::OutOfRange { .. } => ErrorKind::Usage,
            E::InvalidInput(_) | E::NoBranchMatch { .. } | E::MultipleDips(_) => ErrorKind::Data,
            E::NotConverged { .. } | E::RankDeficient(_) => ErrorKind::Numeric,
        };
        Self::new(kind, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let e = CliError::data("line 3,\n column 'x'");
        assert_eq!(e.line(), "error[data]: line 3, column 'x'");
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn core_errors_map_to_kinds() {
        let e: CliError = ringlab_core::Error::NotConverged { iterations: 200 }.into();
        assert_eq!(e.exit_code(), 5);
        let e: CliError = ringlab_core::Error::MultipleDips(2).into();
        assert_eq!(e.exit_code(), 4);
    }
}
