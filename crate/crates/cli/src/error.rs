use thiserror::Error;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_NON_PERIODIC: i32 = 3;

/// A failure carrying the process exit code.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: &str, location: Option<String>) -> Self {
        match location {
            Some(at) => Self::new(EXIT_CONFIG, format!("config error ({at}): {message}")),
            None => Self::new(EXIT_CONFIG, format!("config error: {message}")),
        }
    }

    pub fn config_key(key: &str, message: &str) -> Self {
        Self::new(EXIT_CONFIG, format!("config error: `{key}` {message}"))
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self::new(EXIT_RUNTIME, message)
    }

    pub fn io(what: &str, e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_RUNTIME, format!("{what}: {e}"))
    }
}

impl From<cnlse_core::Error> for CliError {
    fn from(e: cnlse_core::Error) -> Self {
        match e {
            cnlse_core::Error::NonPeriodicRamp { .. } => Self::new(EXIT_NON_PERIODIC, e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}
