use std::fmt;

use decaylab::Error;

/// Usage and configuration problems.
pub const EXIT_USAGE: u8 = 2;
/// Numeric failures and failed checks.
pub const EXIT_NUMERIC: u8 = 1;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn usage(msg: String) -> Self {
        Self {
            code: EXIT_USAGE,
            msg,
        }
    }

    pub fn numeric(msg: String) -> Self {
        Self {
            code: EXIT_NUMERIC,
            msg,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::numeric(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. }
            | Error::Io { .. }
            | Error::InvalidParameters(_)
            | Error::Data { .. } => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}
