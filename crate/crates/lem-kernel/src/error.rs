//! Shared error type and source positions.

use std::fmt;
use thiserror::Error;

/// Half-open region of a source file, 1-based lines and columns.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SourceSpan {
    pub start: (u32, u32),
    pub end: (u32, u32),
}

impl SourceSpan {
    pub fn point(line: u32, col: u32) -> SourceSpan {
        SourceSpan { start: (line, col), end: (line, col) }
    }

    pub fn merge(self, other: SourceSpan) -> SourceSpan {
        SourceSpan { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}:{}", self.start.0, self.start.1, self.end.0, self.end.1)
    }
}

#[derive(Error, Debug, Clone)]
pub enum KernelError {
    /// Concrete-syntax failure.
    #[error("syntax error at {span}: {message}")]
    Syntax { span: SourceSpan, message: String },

    /// `#` applied to an open type or to a type with a negatively
    /// quantified variable.
    #[error("ill-formed modal type{}: {message}", opt_span(.span))]
    IllFormedModality { span: Option<SourceSpan>, message: String },

    /// A variable is used zero or multiple times where exactly one use is
    /// required.
    #[error("non-linear term{}: {message}", opt_span(.span))]
    NonLinear { span: Option<SourceSpan>, message: String },

    /// A derivation node does not match its rule schema.
    #[error("invalid derivation at node {path:?}: {message}")]
    InvalidDerivation { path: Vec<usize>, message: String },

    /// Elaboration cannot determine a quantifier instantiation.
    #[error("needs hint: {0}")]
    NeedsHint(String),

    /// Elaboration found a genuinely unprovable obligation.
    #[error("cannot elaborate: {0}")]
    Unprovable(String),

    /// The requested rewrite does not exist at the given position.
    #[error("no such redex: {0}")]
    NoSuchRedex(String),

    /// Cut elimination was pointed at something it cannot reduce.
    #[error("deadlocked cut: {0}")]
    DeadlockedCut(String),

    #[error("not a cut node: {path:?}")]
    NotACut { path: Vec<usize> },

    /// Circuit validation diagnostics.
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// The machine gave up: fuel or table-size budgets exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

fn opt_span(span: &Option<SourceSpan>) -> String {
    match span {
        Some(s) => format!(" at {s}"),
        None => String::new(),
    }
}

impl KernelError {
    /// Resource exhaustion is reported separately from domain errors so
    /// callers can distinguish "the math says no" from "the machine gave up".
    pub fn is_resource(&self) -> bool {
        matches!(self, KernelError::Resource(_))
    }
}

pub type Result<T> = std::result::Result<T, KernelError>;
