use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("component {component}, {side} piece {piece}: {source}")]
    Piece {
        component: usize,
        side: &'static str,
        piece: usize,
        #[source]
        source: ParseError,
    },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty piece list in component {component} ({side})")]
    EmptyPieceList {
        component: usize,
        side: &'static str,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("convention mismatch: {0}")]
    ConventionMismatch(String),
    #[error("non-affine piece: component {component}, {side} piece {piece}")]
    NonAffine {
        component: usize,
        side: &'static str,
        piece: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by evaluating a formula outside its domain.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Eval(EvalError::Domain { .. }))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
