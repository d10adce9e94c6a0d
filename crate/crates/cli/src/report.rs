//! Report envelope and exit codes.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use structcons::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_INCONSISTENT: u8 = 2;
pub const EXIT_UNDETERMINED: u8 = 3;
pub const EXIT_NOTHING_FOUND: u8 = 4;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_NO_INPUT: u8 = 66;
pub const EXIT_SOFTWARE: u8 = 70;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidScore(_)
            | Error::InvalidOutput(_)
            | Error::IllegalPart { .. }
            | Error::DimensionMismatch { .. }
            | Error::SpaceMismatch { .. }
            | Error::NoFiniteOutput => EXIT_DATA,
            Error::WrongSpace { .. }
            | Error::WrongLossKind { .. }
            | Error::SpaceTooLarge { .. }
            | Error::InvalidConfig(_) => EXIT_USAGE,
            Error::Io(_) => EXIT_NO_INPUT,
            _ => EXIT_SOFTWARE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// What a subcommand hands back to `main`.
pub struct Outcome {
    pub code: u8,
    pub digest: Option<String>,
    pub results: Value,
    pub text: String,
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub command: &'a [String],
    pub input_digest: Option<&'a str>,
    pub results: &'a Value,
    /// Not covered by the determinism contract.
    pub wall_time_ms: u64,
    pub version: &'static str,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Reads an input file, returning its contents and digest.
pub fn read_input(path: &std::path::Path) -> Result<(String, String), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure {
        code: EXIT_NO_INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    let hash = digest(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::data(format!("{}: not UTF-8", path.display())))?;
    Ok((text, hash))
}

pub fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("report serializes")
}
