use std::fmt::Display;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario, bad arguments or an infeasible engine choice.
    #[error("{0}")]
    Validation(String),

    /// The numerics broke down or a recorded check failed.
    #[error("{0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn field(name: &str, reason: impl Display) -> Self {
        Self::Validation(format!("{name}: {reason}"))
    }

    pub fn io(context: impl Display, source: std::io::Error) -> Self {
        Self::Io {
            context: context.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl From<corridor_core::Error> for CliError {
    fn from(e: corridor_core::Error) -> Self {
        use corridor_core::Error as E;
        match e {
            E::NotNormalizable(_) => Self::Numerical(e.to_string()),
            E::Io(source) => Self::io("core", source),
            other => Self::Validation(other.to_string()),
        }
    }
}
