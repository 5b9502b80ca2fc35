//! Failures and their exit codes.

use roughflow::{ConfigError, Error};

#[derive(Debug)]
pub enum Failure {
    /// Malformed or unusable config; exit 1.
    Config { path: String, message: String },
    /// Scenario outside the hypotheses the task needs; exit 2.
    Hypothesis(String),
    /// Solver or invariant failure; exit 3.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config { .. } => 1,
            Failure::Hypothesis(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn report(&self) -> String {
        match self {
            Failure::Config { path, message } => format!("config error at {path}: {message}"),
            Failure::Hypothesis(m) => format!("hypothesis violated: {m}"),
            Failure::Numerical(m) => format!("numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config { path: e.path, message: e.message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config { path: "out".into(), message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::HypothesisViolated(m) => Failure::Hypothesis(m),
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e => Failure::Config { path: ".".into(), message: e.to_string() },
        }
    }
}
