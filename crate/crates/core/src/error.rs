//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Two matrix shapes that an operation required to agree did not.
    #[error("{op}: incompatible shapes {left_rows}x{left_cols} and {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// Matrix constructor received data whose length does not match rows*cols.
    #[error("matrix {rows}x{cols} requires {} values, got {got}", rows * cols)]
    DataLength { rows: usize, cols: usize, got: usize },

    /// A computation produced or encountered a non-finite value.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// The training loss went non-finite; carries enough state to diagnose.
    #[error("non-finite loss at epoch {epoch}, snapshot {snapshot} (lr={lr})")]
    NonFiniteLoss { epoch: usize, snapshot: usize, lr: f64 },

    /// A configuration value failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A dataset / partition file failed to parse.
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    /// Snapshot index outside 1..=T.
    #[error("snapshot index {t} out of range 1..={max}")]
    SnapshotOutOfRange { t: usize, max: usize },

    /// Two partitions or networks that must cover the same nodes do not.
    #[error("node-set mismatch: {0}")]
    NodeSetMismatch(String),

    /// Aligned sequences (per-snapshot partitions, embeddings) differ in length.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// Benchmark generation could not wire a graph within the retry budget.
    #[error("graph generation failed: {0}; relax the degree/community parameters")]
    Generation(String),

    /// Clustering input was empty or otherwise unusable.
    #[error("clustering: {0}")]
    Clustering(String),

    /// Negative sampling had no valid candidate left.
    #[error("no valid negative sample for node {node} at snapshot {snapshot}")]
    NoNegative { node: usize, snapshot: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input (configs, malformed files)
    /// as opposed to runtime/numeric failures. The CLI maps this to exit
    /// code 1 versus 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::NodeSetMismatch(_)
                | Error::LengthMismatch(_)
                | Error::SnapshotOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
