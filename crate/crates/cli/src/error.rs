//! CLI error handling: every failure maps to a documented exit code and a
//! one-line machine-readable JSON record on stderr.
//!
//! | exit | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success                                  |
//! | 2    | usage error (bad flags or arguments)     |
//! | 3    | file input/output failure                |
//! | 4    | input schema problem                     |
//! | 5    | cell or field parse failure              |
//! | 6    | unfillable gap in the date coverage      |
//! | 7    | not enough observations                  |
//! | 8    | numerically degenerate input             |
//! | 9    | argument outside its documented range    |
//! | 10   | manifest verification failure            |

use std::path::Path;

use varcast::ErrorKind;

/// Anything a subcommand can fail with.
#[derive(Debug)]
pub enum AppError {
    /// An error from the modeling library.
    Core(varcast::Error),
    /// A filesystem failure on a path the CLI touched directly.
    Io { path: String, source: std::io::Error },
    /// A manifest file that does not parse.
    ManifestForm { origin: String, detail: String },
    /// A manifest whose recorded hashes or argv no longer match reality.
    ManifestVerify { detail: String },
    /// A flag combination or value the CLI itself rejects.
    Usage { detail: String },
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io { path: path.display().to_string(), source }
    }

    pub fn manifest_form(origin: &Path, detail: impl Into<String>) -> Self {
        AppError::ManifestForm {
            origin: origin.display().to_string(),
            detail: detail.into(),
        }
    }

    pub fn manifest_verify(detail: impl Into<String>) -> Self {
        AppError::ManifestVerify { detail: detail.into() }
    }

    pub fn usage(detail: impl Into<String>) -> Self {
        AppError::Usage { detail: detail.into() }
    }

    /// Stable machine-readable tag for the JSON error record.
    pub fn kind_label(&self) -> &'static str {
        match self {
            AppError::Core(e) => match e.kind() {
                ErrorKind::Io => "io",
                ErrorKind::Schema => "schema",
                ErrorKind::Parse => "parse",
                ErrorKind::Gap => "gap",
                ErrorKind::InsufficientData => "insufficient_data",
                ErrorKind::Degenerate => "degenerate",
                ErrorKind::InvalidArgument => "invalid_argument",
            },
            AppError::Io { .. } => "io",
            AppError::ManifestForm { .. } => "parse",
            AppError::ManifestVerify { .. } => "manifest_verification",
            AppError::Usage { .. } => "usage",
        }
    }

    /// Documented process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) => match e.kind() {
                ErrorKind::Io => 3,
                ErrorKind::Schema => 4,
                ErrorKind::Parse => 5,
                ErrorKind::Gap => 6,
                ErrorKind::InsufficientData => 7,
                ErrorKind::Degenerate => 8,
                ErrorKind::InvalidArgument => 9,
            },
            AppError::Io { .. } => 3,
            AppError::ManifestForm { .. } => 5,
            AppError::ManifestVerify { .. } => 10,
            AppError::Usage { .. } => 2,
        }
    }

    pub fn message(&self) -> String {
        match self {
            AppError::Core(e) => e.to_string(),
            AppError::Io { path, source } => format!("{path}: {source}"),
            AppError::ManifestForm { origin, detail } => {
                format!("malformed manifest {origin}: {detail}")
            }
            AppError::ManifestVerify { detail } => {
                format!("manifest verification failed: {detail}")
            }
            AppError::Usage { detail } => detail.clone(),
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind_label(),
                "exit_code": self.exit_code(),
                "message": self.message(),
            }
        })
        .to_string()
    }
}

impl From<varcast::Error> for AppError {
    fn from(e: varcast::Error) -> Self {
        AppError::Core(e)
    }
}
