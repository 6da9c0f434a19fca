//! File formats, experiment pipeline and synthetic data for `pardep`.
//!
//! The parsers themselves live in [`pardep_core`]; this crate adds what needs
//! `std`: CoNLL-X treebank I/O, model files, declarative experiment plans,
//! parallel evaluation and completion, and report generation.

pub mod conll;
pub mod model_io;
pub mod pipeline;
pub mod synth;

use std::fmt;

/// Process exit status of a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad flags or an invalid plan or configuration.
    Usage,
    /// Unreadable or malformed input data.
    Data,
    /// Training, simulation or decoding failed.
    Training,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Usage => 1,
            FailureKind::Data => 2,
            FailureKind::Training => 3,
        }
    }
}

/// A command failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Usage,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Data,
            message: message.into(),
        }
    }

    pub fn training(message: impl Into<String>) -> Self {
        Failure {
            kind: FailureKind::Training,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}
