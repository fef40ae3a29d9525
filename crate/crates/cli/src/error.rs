use std::path::Path;

use serde::Serialize;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    /// Malformed or semantically invalid input.
    Validation,
    /// A file or socket could not be read or written.
    Io,
    /// An internal invariant did not hold.
    Internal,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Validation => 1,
            ExitKind::Io => 2,
            ExitKind::Internal => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
    /// Rubric id the error is about, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rubric_id: Option<String>,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::Validation,
            message: message.into(),
            rubric_id: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::Internal,
            message: message.into(),
            rubric_id: None,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Io,
            message: format!("{}: {err}", path.display()),
            rubric_id: None,
        }
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }

    pub fn code(&self) -> i32 {
        self.kind.code()
    }
}
