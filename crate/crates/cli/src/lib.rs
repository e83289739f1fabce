//! Batch front-end for the critical Jacobi toolkit.

pub mod classify;
pub mod levinson;
pub mod output;
pub mod scan;
pub mod verify;

use critical_jacobi::Error;

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PrecisionTooLow { .. }
            | Error::AlphaOutOfRange(_)
            | Error::ZeroModulation
            | Error::AnsatzUndefined
            | Error::InvalidArgument(_)
            | Error::Spec(_)
            | Error::ParseScalar(_)
            | Error::Json { .. }
            | Error::Io(_) => EXIT_USAGE,
            _ => EXIT_CHECK_FAILED,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Raises `requested` to `required` if needed, returning a warning.
pub fn resolve_digits(requested: Option<u32>, required: u32) -> (u32, Option<String>) {
    match requested {
        None => (required, None),
        Some(d) if d >= required => (d, None),
        Some(d) => (
            required,
            Some(format!(
                "warning: --digits {d} is below the exponent budget; raised to {required}"
            )),
        ),
    }
}
