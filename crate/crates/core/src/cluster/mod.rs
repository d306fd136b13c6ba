//! Per-snapshot clustering of embeddings into community partitions:
//! self-organizing map (default) or K-means.

mod kmeans;
mod som;

pub use kmeans::kmeans;
pub use som::{som_assign, som_fit, SomConfig};

use crate::error::{Error, Result};
use crate::num::{Matrix, Scalar};

/// Clustering method selection for the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterMethod {
    Som,
    /// K-means with the given cluster count; `None` defers to the
    /// ground-truth community count of each snapshot.
    KMeans(Option<usize>),
}

/// Squared Euclidean distance between two equally long slices.
pub(crate) fn sq_dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

pub(crate) fn check_points<S: Scalar>(points: &Matrix<S>) -> Result<()> {
    if points.rows() == 0 || points.cols() == 0 {
        return Err(Error::Clustering("empty input".into()));
    }
    Ok(())
}
