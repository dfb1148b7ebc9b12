// Copyright 2026 The qoc-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use qoc_core::QocError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(QocError),
    #[error("gradient check failed: {0}")]
    GradCheck(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::GradCheck(_) => 4,
            Self::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Numeric(_) => "numeric",
            Self::GradCheck(_) => "grad_check",
            Self::Io { .. } => "io",
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Single-line JSON written to stderr on failure.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: i32,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Envelope {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        })
        .expect("error body serializes")
    }
}

/// Input validation failures are configuration errors; anything raised
/// while computing is numeric.
impl From<QocError> for CliError {
    fn from(e: QocError) -> Self {
        match e {
            QocError::NonFinite(_) | QocError::EigenFailure | QocError::NotStructured { .. } => {
                Self::Numeric(e)
            }
            _ => Self::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_and_json() {
        let e = CliError::Config("iterations must be at least 1".into());
        assert_eq!(e.exit_code(), 2);
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "config");
        assert_eq!(v["error"]["exit_code"], 2);
        assert_eq!(CliError::from(QocError::NonFinite("loss")).exit_code(), 3);
        assert_eq!(
            CliError::from(QocError::InvalidStrategy("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::GradCheck("1e-3".into()).exit_code(), 4);
    }
}
