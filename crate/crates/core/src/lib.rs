//! Dynamic community discovery through spatiotemporal graph embedding.
//!
//! The pipeline learns one embedding matrix per network snapshot: a stack of
//! graph-convolution layers aggregates neighborhood structure within each
//! snapshot, a matrix GRU carries the convolution weights from one snapshot to
//! the next, and a second, per-node GRU smooths the embeddings along the time
//! axis. Training is unsupervised, with a margin ranking loss over connected
//! node pairs against degree-biased negative samples. Embeddings are clustered
//! per snapshot (self-organizing map by default, K-means as an alternative)
//! and the resulting partitions are scored against ground truth with purity,
//! NMI, homogeneity, and completeness.
//!
//! Numeric kernels are generic over the scalar type ([`num::Scalar`], i.e.
//! `f32` or `f64`); the aliases below fix the `f64` instantiations the
//! pipeline and CLI use.

pub mod cluster;
pub mod error;
pub mod graph;
pub mod lfr;
pub mod metrics;
pub mod num;
pub mod spatial;
pub mod temporal;
pub mod train;

pub use error::{Error, Result};

/// Dense `f64` matrix, the default carrier for the whole pipeline.
pub type Mat = num::Matrix<f64>;
/// `f32` instantiation, for callers that trade precision for memory.
pub type Mat32 = num::Matrix<f32>;
/// Gradient tape over `f64` matrices.
pub type Tape = num::Tape<f64>;
