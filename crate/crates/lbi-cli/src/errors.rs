//! Process exit codes: 2 for input problems, 3 for internal assertion
//! failures (a simulator/golden-model mismatch).

use std::fmt;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: u8,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn input(source: anyhow::Error) -> Self {
        CliError {
            exit_code: EXIT_INPUT,
            source,
        }
    }

    pub fn internal(source: anyhow::Error) -> Self {
        CliError {
            exit_code: EXIT_INTERNAL,
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

pub type CliResult = Result<(), CliError>;

/// Shorthand for commands whose failures are all input-class.
pub fn input_errors(result: anyhow::Result<()>) -> CliResult {
    result.map_err(CliError::input)
}
