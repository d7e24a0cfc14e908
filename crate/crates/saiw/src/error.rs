//! Crate-wide error vocabulary.
//!
//! Every tool in the chain reports failures through this one enum so that
//! the CLI can map outcomes to stable exit codes and JSON reports without
//! per-module translation layers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The tensor-name edge relation contains a cycle.
    #[error("cycle through tensors: {}", tensors.join(" -> "))]
    Cycle { tensors: Vec<String> },

    /// Operand shapes are inconsistent at a node.
    #[error("shape error at node '{node}': {detail}")]
    Shape { node: String, detail: String },

    /// Operator (or operator feature) outside the supported subset.
    #[error("unsupported operator '{op}': {detail}")]
    UnsupportedOp { op: String, detail: String },

    /// Malformed serialized input.
    #[error("parse error at byte offset {offset}: {detail}")]
    Parse { offset: usize, detail: String },

    /// A structural graph invariant does not hold.
    #[error("graph invariant violated: {0}")]
    Invariant(String),

    /// Refusal to attest a model whose signature does not match.
    #[error("attestation refused: {0}")]
    Attestation(String),

    /// Partition spec is malformed; location is a JSON pointer.
    #[error("invalid partition spec at '{location}': {detail}")]
    Spec { location: String, detail: String },

    /// A spec directive targets a node of the wrong kind.
    #[error("node '{node}': {detail}")]
    NodeKind { node: String, detail: String },

    /// A channel range is out of bounds or empty.
    #[error("invalid channel range on node '{node}': {detail}")]
    Range { node: String, detail: String },

    /// Partition spec does not bind to the presented model.
    #[error("spec/model mismatch: {0}")]
    SpecMismatch(String),

    /// Spec references a node absent from the model.
    #[error("unknown node '{0}'")]
    UnknownNode(String),

    /// Manifest does not match the presented runtime files.
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    /// A required graph input was not provided.
    #[error("missing input tensor '{0}'")]
    MissingInput(String),

    /// No foreground pixels survive binarization.
    #[error("empty shape: no pixel exceeds the binarization threshold")]
    EmptyShape,

    /// Foreground component too small to carry a contour.
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    /// Invalid algorithm parameter.
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn shape(node: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Shape { node: node.into(), detail: detail.into() }
    }

    pub fn unsupported(op: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::UnsupportedOp { op: op.into(), detail: detail.into() }
    }

    pub fn parse(offset: usize, detail: impl Into<String>) -> Self {
        Error::Parse { offset, detail: detail.into() }
    }

    pub fn spec(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Spec { location: location.into(), detail: detail.into() }
    }
}
