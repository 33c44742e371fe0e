use std::fmt;

use pcaselect::campaign::{CampaignError, ErrorClass, OutcomeError};
use pcaselect::ingest::IngestError;
use pcaselect::selector::SelectError;
use serde::Serialize;

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Exit 1: bad input, bad arguments, bad config.
    Validation,
    /// Exit 2: missing or unwritable files, corrupt campaign, busy port.
    Io,
    /// Exit 3: operation not allowed in the campaign's current state.
    StateMachine,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
            ErrorKind::StateMachine => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError { kind, code: kind.exit_code(), message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Io, message)
    }

    /// One line of JSON for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let kind = if matches!(e, IngestError::Io { .. }) { ErrorKind::Io } else { ErrorKind::Validation };
        CliError::new(kind, e.to_string())
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        let kind = match e.class() {
            ErrorClass::Validation => ErrorKind::Validation,
            ErrorClass::Io => ErrorKind::Io,
            ErrorClass::StateMachine => ErrorKind::StateMachine,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<SelectError> for CliError {
    fn from(e: SelectError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<OutcomeError> for CliError {
    fn from(e: OutcomeError) -> Self {
        CliError::validation(e.to_string())
    }
}
