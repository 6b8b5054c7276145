//! Batch front end for the screening-effect laboratory.
//!
//! Everything the `krigelab` binary does lives here so the selfcheck
//! subcommand and the acceptance test target can drive the same code:
//!
//! - [`config`]: the run configuration — a JSON file, overriding command-line
//!   flags, and the `KRIGE_PRECISION` environment variable — fully validated
//!   before any computation starts.
//! - [`report`]: CSV rendering with a fixed 12-significant-digit numeric
//!   format, comment-prefixed context and footer lines, and the optional
//!   timestamp header.
//! - [`svg`]: self-contained polyline plots of ratio against log epsilon.
//! - [`commands`]: one function per subcommand, each returning the rendered
//!   artifacts plus a continuous-integration verdict.
//! - [`acceptance`]: the acceptance suite behind `krigelab selfcheck`, one
//!   numbered criterion per check with its tolerances pinned in code.
//!
//! Exit codes are part of the contract: 0 success, 1 verdict mismatch (a
//! documented reference was missed beyond tolerance, for CI use), 2 invalid
//! configuration (nothing was computed, no file was written), 3 numerical
//! failure.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

use std::path::PathBuf;

/// Process exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// A computed verdict disagreed with its documented expectation.
pub const EXIT_VERDICT: i32 = 1;
/// The configuration was rejected before any computation.
pub const EXIT_CONFIG: i32 = 2;
/// A solve or quadrature failed after the configuration was accepted.
pub const EXIT_NUMERICAL: i32 = 3;

/// Failures that abort a command (verdict mismatches do not; they are part
/// of a command's normal output and only color the exit code).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The request could not be validated: malformed file, unknown key or
    /// scenario, contradictory flags. Nothing was computed or written.
    #[error("invalid configuration: {reason}")]
    Config { reason: String },
    /// The configuration was valid but a numerical stage gave up.
    #[error("numerical failure: {reason}")]
    Numerical { reason: String },
}

impl CliError {
    pub fn config(reason: impl Into<String>) -> Self {
        CliError::Config { reason: reason.into() }
    }

    pub fn numerical(reason: impl Into<String>) -> Self {
        CliError::Numerical { reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
        }
    }
}

/// One rendered output: a file when `path` is set, standard output otherwise.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub contents: String,
}

/// What a command produced. Artifacts are written only after the whole
/// computation succeeded, in order, so a failed run leaves no files behind.
#[derive(Debug, Clone)]
pub struct CommandResult {
    pub artifacts: Vec<Artifact>,
    /// `false` when a documented expectation was missed; maps to exit 1.
    pub ci_ok: bool,
}

impl CommandResult {
    pub fn exit_code(&self) -> i32 {
        if self.ci_ok {
            EXIT_OK
        } else {
            EXIT_VERDICT
        }
    }
}
