use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{message}", field.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
    Config {
        message: String,
        field: Option<String>,
        line: Option<usize>,
        column: Option<usize>,
    },

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
            field: Some(field.into()),
            line: None,
            column: None,
        }
    }

    pub fn io(path: impl Into<PathBuf>, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            message: e.to_string(),
        }
    }

    /// 2 config, 3 numerical, 4 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": match self {
                CliError::Config { .. } => "config",
                CliError::Numerical(_) => "numerical",
                CliError::Io { .. } => "io",
            },
            "code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::Config {
                field,
                line,
                column,
                ..
            } => {
                if let Some(f) = field {
                    body["field"] = json!(f);
                }
                if let Some(l) = line {
                    body["line"] = json!(l);
                }
                if let Some(c) = column {
                    body["column"] = json!(c);
                }
            }
            CliError::Numerical(_) => {}
            CliError::Io { path, .. } => body["path"] = json!(path),
        }
        json!({ "error": body })
    }
}

/// Parameter and state errors are configuration problems; the rest come
/// from the numerics.
impl From<resdecay::Error> for CliError {
    fn from(e: resdecay::Error) -> Self {
        use resdecay::Error as E;
        match e {
            E::InvalidParameter(_) | E::Domain { .. } | E::DegenerateState(_) => CliError::Config {
                message: e.to_string(),
                field: None,
                line: None,
                column: None,
            },
            other => CliError::Numerical(other.to_string()),
        }
    }
}
