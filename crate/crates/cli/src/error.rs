use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerics(#[from] zeno_core::Error),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        Self::Config(ConfigError {
            line: None,
            field: field.to_string(),
            reason: reason.into(),
        })
    }

    /// 2 for configuration problems, 3 for numerical non-convergence, 4 for
    /// failed validation, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        use zeno_core::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Numerics(E::InvalidParameter { .. } | E::Domain(_)) => 2,
            Self::Numerics(E::NormLoss { .. }) => 4,
            Self::Numerics(_) => 3,
            Self::Validation(_) => 4,
            Self::Io(_) => 1,
        }
    }
}
