use std::fmt;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// A failure carrying the process exit status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERIC, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<spinboson::Error> for CliError {
    fn from(e: spinboson::Error) -> Self {
        use spinboson::Error as E;
        let code = match &e {
            E::Argument(_) | E::Config { .. } | E::Contract(_) => EXIT_CONFIG,
            E::Numeric(_) | E::Integration { .. } => EXIT_NUMERIC,
            E::Resource { .. } => EXIT_RESOURCE,
            E::Internal(_) => EXIT_OTHER,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_OTHER, message: format!("I/O error: {e}") }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self { code: EXIT_OTHER, message: format!("CSV error: {e}") }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self { code: EXIT_OTHER, message: format!("JSON error: {e}") }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
