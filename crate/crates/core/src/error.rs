// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the simulation library.
///
/// Variants are grouped so that the CLI (and the C ABI) can map them onto
/// distinct exit/status codes: configuration problems, truncation aborts and
/// numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates a documented precondition. `field` names the
    /// offending parameter or config key.
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    /// The truncated Fock basis does not capture enough Gibbs weight.
    #[error(
        "truncation abort: Gibbs weight captured with max_excitations = {max_excitations} is {captured:.6} (< {required})"
    )]
    Truncation {
        max_excitations: usize,
        captured: f64,
        required: f64,
    },

    /// A numerical routine failed (non-convergence, step failure, ...).
    /// `index` is the offending grid index when there is one.
    #[error("solver failure in {routine}{}: {reason}", .index.map(|i| format!(" at grid index {i}")).unwrap_or_default())]
    Solver {
        routine: &'static str,
        index: Option<usize>,
        reason: String,
    },

    /// Reading a config or writing an artifact failed.
    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Process exit codes used by the `spinboson` binary.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    /// Command-line usage error (reported by the argument parser).
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const TRUNCATION: i32 = 4;
    pub const SOLVER: i32 = 5;
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput { .. } => exit::CONFIG,
            Error::Truncation { .. } => exit::TRUNCATION,
            Error::Solver { .. } => exit::SOLVER,
            Error::Io { .. } => exit::IO,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn solver(routine: &'static str, reason: impl Into<String>) -> Self {
        Error::Solver {
            routine,
            index: None,
            reason: reason.into(),
        }
    }

    pub(crate) fn solver_at(routine: &'static str, index: usize, reason: impl Into<String>) -> Self {
        Error::Solver {
            routine,
            index: Some(index),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
