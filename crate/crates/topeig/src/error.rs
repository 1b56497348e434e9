use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] topeig_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 non-convergence, 4 inconclusive, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use topeig_core::Error as E;
        match self {
            AppError::Config(_) => 2,
            AppError::Numeric(E::NonConvergence { .. } | E::Eigensolver(_)) => 3,
            AppError::Numeric(_) => 2,
            AppError::Inconclusive(_) => 4,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use topeig_core::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(AppError::config("x").exit_code(), 2);
        assert_eq!(AppError::from(E::InvalidInput("x".into())).exit_code(), 2);
        let nc = E::NonConvergence {
            method: "lanczos",
            iterations: 3,
            residual: 1.0,
        };
        assert_eq!(AppError::from(nc).exit_code(), 3);
        assert_eq!(AppError::Inconclusive("x".into()).exit_code(), 4);
        assert_eq!(AppError::io("p", std::io::Error::other("x")).exit_code(), 1);
    }
}
