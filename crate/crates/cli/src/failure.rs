//! Exit codes and the JSON error record written to stderr.

use ringred::Error;
use serde::Serialize;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, kind: "validation", message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, kind: "numerical", message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self, "exit_code": self.code }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NonSubcriticalExponent { .. }
            | Error::InvalidInput(_)
            | Error::NonZeroMeanForcing { .. }
            | Error::DhatTooSmall { .. }
            | Error::DecayViolated { .. }
            | Error::InfimumViolated { .. }
            | Error::RegimeViolated(_)
            | Error::Json(_) => Self::validation(message),
            Error::Io(_) => Self { code: EXIT_NUMERICAL, kind: "io", message },
            _ => Self::numerical(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}
