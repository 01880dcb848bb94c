//! File formats, traces, the reproduction suite and the command-line front
//! end for [`entropic_lp_core`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;

pub mod cli;
pub mod io;
pub mod reproduce;
pub mod trace;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Some reproduction criterion failed.
pub const EXIT_CRITERION: i32 = 1;
/// Malformed input, flags or files.
pub const EXIT_INPUT: i32 = 2;
/// The solver gave up (underflow, bracket or iteration limits).
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Solver(#[from] entropic_lp_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("{failed} of {total} criteria failed")]
    Criteria { failed: usize, total: usize },
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Solver(e) if e.is_numerical() => EXIT_NUMERICAL,
            AppError::Criteria { .. } => EXIT_CRITERION,
            _ => EXIT_INPUT,
        }
    }

    /// Short machine-readable tag: the solver error variant, or the kind of
    /// front-end failure.
    pub fn kind(&self) -> String {
        match self {
            AppError::Solver(e) => {
                let debug = format!("{e:?}");
                debug
                    .split(|c: char| !c.is_alphanumeric())
                    .next()
                    .unwrap_or_default()
                    .to_string()
            }
            AppError::Io { .. } => "Io".into(),
            AppError::Parse(_) => "Parse".into(),
            AppError::Usage(_) => "Usage".into(),
            AppError::Criteria { .. } => "CriteriaFailed".into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
