use alloc_core::model::ModelError;
use alloc_core::Error;

/// Exit codes of the `alloc-sim` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const REFUTED: i32 = 3;
    pub const BUDGET: i32 = 4;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse(_) | CliError::Io(_) => exit::PARSE,
            CliError::Invalid(_) => exit::INVALID,
            CliError::Budget(_) => exit::BUDGET,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::MalformedRational(_) | ModelError::ZeroDenominator(_) | ModelError::Format(_) => {
                CliError::Parse(e.to_string())
            }
            ModelError::InvalidPolicy(_) => CliError::Usage(e.to_string()),
            ModelError::InvalidValuation(_) | ModelError::InvalidInstance(_) | ModelError::InvalidStrategy(_) => {
                CliError::Invalid(e.to_string())
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Model(m) => m.into(),
            Error::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            Error::UnknownMechanism(_) | Error::NoFamilies | Error::AgentOutOfRange { .. } => {
                CliError::Usage(e.to_string())
            }
            Error::Generator(_) | Error::ExactTooLarge { .. } | Error::NoSamples => CliError::Usage(e.to_string()),
            Error::Engine(_) | Error::Strategy(_) => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
