//! Classic online self-organizing map.
//!
//! Competing units sit on a rectangular grid; each training iteration picks a
//! data point, finds its best-matching unit (BMU) by Euclidean distance, and
//! pulls every unit toward the point with a Gaussian neighborhood factor.
//! Learning rate and neighborhood radius both decay exponentially. Nodes that
//! share a BMU after fitting form one community — empty units produce none.

use rand::Rng;

use crate::cluster::{check_points, sq_dist};
use crate::error::{Error, Result};
use crate::graph::Partition;
use crate::num::{seeded_rng, Matrix, Scalar};

#[derive(Clone, Debug)]
pub struct SomConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Initial learning rate, in (0, 1].
    pub alpha0: f64,
    /// Initial neighborhood radius in grid coordinates.
    pub sigma0: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl SomConfig {
    /// Defaults for `n` data points: a square grid of about 2*sqrt(n) units,
    /// alpha0 = 0.5, sigma0 = half the grid diagonal, 50n iterations.
    pub fn for_points(n: usize, seed: u64) -> Self {
        let side = (2.0 * (n as f64).sqrt()).sqrt().ceil().max(2.0) as usize;
        let diag = (((side - 1).pow(2) * 2) as f64).sqrt();
        Self {
            grid_rows: side,
            grid_cols: side,
            alpha0: 0.5,
            sigma0: (diag / 2.0).max(0.5),
            iterations: 50 * n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_rows * self.grid_cols < 2 {
            return Err(Error::InvalidConfig("SOM grid needs at least 2 units".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "SOM alpha0 must be in (0,1], got {}",
                self.alpha0
            )));
        }
        if self.sigma0 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "SOM sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        Ok(())
    }

    fn unit_pos(&self, unit: usize) -> (usize, usize) {
        (unit / self.grid_cols, unit % self.grid_cols)
    }
}

/// Index of the unit nearest to `point`; ties go to the lowest unit index.
fn best_matching_unit<S: Scalar>(units: &Matrix<S>, point: &[S]) -> usize {
    let mut best = 0usize;
    let mut best_d = sq_dist(units.row(0), point);
    for u in 1..units.rows() {
        let d = sq_dist(units.row(u), point);
        if d < best_d {
            best_d = d;
            best = u;
        }
    }
    best
}

/// Fits the unit grid to `points` (n x d); returns the unit weight matrix
/// (grid_rows*grid_cols x d).
pub fn som_fit<S: Scalar>(points: &Matrix<S>, config: &SomConfig) -> Result<Matrix<S>> {
    check_points(points)?;
    config.validate()?;
    let n = points.rows();
    let d = points.cols();
    let unit_count = config.grid_rows * config.grid_cols;
    let mut rng = seeded_rng(config.seed);

    // init units at randomly sampled data points
    let mut units = Matrix::zeros(unit_count, d);
    for u in 0..unit_count {
        let pick = rng.gen_range(0..n);
        for j in 0..d {
            units.set(u, j, points.get(pick, j));
        }
    }

    let total = config.iterations.max(1) as f64;
    for s in 0..config.iterations {
        let decay = (-(s as f64) / total).exp();
        let alpha = config.alpha0 * decay;
        let sigma = config.sigma0 * decay;
        let two_sigma_sq = 2.0 * sigma * sigma;

        let point: Vec<S> = points.row(rng.gen_range(0..n)).to_vec();
        let bmu = best_matching_unit(&units, &point);
        let (br, bc) = config.unit_pos(bmu);
        for u in 0..unit_count {
            let (ur, uc) = config.unit_pos(u);
            let dr = ur as f64 - br as f64;
            let dc = uc as f64 - bc as f64;
            let grid_d2 = dr * dr + dc * dc;
            let h = S::from_f64(alpha * (-grid_d2 / two_sigma_sq).exp());
            for j in 0..d {
                let w = units.get(u, j);
                units.set(u, j, w + h * (point[j] - w));
            }
        }
    }
    Ok(units)
}

/// Labels each point by its BMU and compacts non-empty units to contiguous
/// community ids (ordered by unit index).
pub fn som_assign<S: Scalar>(points: &Matrix<S>, units: &Matrix<S>, t: usize) -> Result<Partition> {
    check_points(points)?;
    if units.cols() != points.cols() {
        return Err(Error::ShapeMismatch {
            op: "som_assign",
            left_rows: points.rows(),
            left_cols: points.cols(),
            right_rows: units.rows(),
            right_cols: units.cols(),
        });
    }
    let mut unit_to_comm = vec![usize::MAX; units.rows()];
    let mut bmus = Vec::with_capacity(points.rows());
    for i in 0..points.rows() {
        bmus.push(best_matching_unit(units, points.row(i)));
    }
    let mut next = 0usize;
    for u in 0..units.rows() {
        if bmus.iter().any(|&b| b == u) {
            unit_to_comm[u] = next;
            next += 1;
        }
    }
    Ok(Partition::new(t, bmus.into_iter().map(|b| unit_to_comm[b]).collect()))
}
