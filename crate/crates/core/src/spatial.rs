//! Per-snapshot spatial encoder: a stack of graph-convolution layers whose
//! weight matrices are carried from one snapshot to the next by a matrix GRU.
//!
//! One layer computes `LeakyReLU(A_hat * F * W)`. Before each layer runs, the
//! layer's weights are evolved: the GRU treats the previous snapshot's weight
//! matrix as its hidden state and a top-k summary of the current input
//! features as its input, so the gate arithmetic stays in the weight matrix's
//! own shape.

use crate::error::{Error, Result};
use crate::num::{glorot_uniform, Matrix, NodeId, Prng, Scalar, Tape};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const DEFAULT_EMBED_DIM: usize = 32;

/// Architecture of the GCN stack.
#[derive(Clone, Debug)]
pub struct GcnConfig {
    /// Layer widths `[d_0, d_1, .., d_L]`; layer `l` maps `d_{l-1} -> d_l`.
    pub dims: Vec<usize>,
    /// LeakyReLU negative slope.
    pub leaky_slope: f64,
    /// When false, the weight GRU gates see only the previous weights (the
    /// feature term is dropped); an ablation switch.
    pub use_feature_term: bool,
    /// Whether the initial node features are trained. The convolution path
    /// defaults to a fixed random feature matrix (no observed attributes
    /// exist, and free per-node features would let a static stack memorize
    /// communities outright, washing out the temporal stages).
    pub learn_features: bool,
}

impl GcnConfig {
    /// The default two-layer stack with uniform width `d`.
    pub fn two_layer(d: usize) -> Self {
        Self {
            dims: vec![d, d, d],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            use_feature_term: true,
            learn_features: false,
        }
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn embed_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "GCN needs at least one layer (two dims)".into(),
            ));
        }
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig("GCN layer widths must be positive".into()));
        }
        if !(0.0 < self.leaky_slope && self.leaky_slope < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "LeakyReLU slope must be in (0,1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }
}

/// Learnable state of the GCN stack: the shared initial node features and
/// one weight matrix per layer (the weights before the first snapshot).
#[derive(Clone, Debug)]
pub struct GcnStackParams<S> {
    /// n x d_0, shared across snapshots.
    pub f0: Matrix<S>,
    /// Per layer: d_{l-1} x d_l.
    pub weights: Vec<Matrix<S>>,
}

impl<S: Scalar> GcnStackParams<S> {
    pub fn init(node_count: usize, cfg: &GcnConfig, rng: &mut Prng) -> Self {
        let f0 = glorot_uniform(node_count, cfg.dims[0], rng);
        let weights = (1..cfg.dims.len())
            .map(|l| glorot_uniform(cfg.dims[l - 1], cfg.dims[l], rng))
            .collect();
        Self { f0, weights }
    }
}

/// Weight-evolution GRU parameters for one layer whose weight matrix is
/// d_in x d_out. `u_*` act on the hidden state (the weights), `v_*` on the
/// transposed feature summary, biases share the weight shape, and `scores`
/// ranks node rows for the summary.
#[derive(Clone, Debug)]
pub struct WeightGruParams<S> {
    pub u_z: Matrix<S>,
    pub u_r: Matrix<S>,
    pub u_w: Matrix<S>,
    pub v_z: Matrix<S>,
    pub v_r: Matrix<S>,
    pub v_w: Matrix<S>,
    pub b_z: Matrix<S>,
    pub b_r: Matrix<S>,
    pub b_w: Matrix<S>,
    /// d_in x 1 scoring vector for the top-k row summary.
    pub scores: Matrix<S>,
}

impl<S: Scalar> WeightGruParams<S> {
    pub fn init(d_in: usize, d_out: usize, rng: &mut Prng) -> Self {
        Self {
            u_z: glorot_uniform(d_in, d_in, rng),
            u_r: glorot_uniform(d_in, d_in, rng),
            u_w: glorot_uniform(d_in, d_in, rng),
            v_z: glorot_uniform(d_in, d_in, rng),
            v_r: glorot_uniform(d_in, d_in, rng),
            v_w: glorot_uniform(d_in, d_in, rng),
            // positive update-gate bias: evolved weights start close to the
            // previous snapshot's, and the GRU learns when to deviate
            b_z: Matrix::filled(d_in, d_out, S::from_f64(2.0)),
            b_r: Matrix::zeros(d_in, d_out),
            b_w: Matrix::zeros(d_in, d_out),
            scores: glorot_uniform(d_in, 1, rng),
        }
    }

    pub fn matrices(&self) -> [&Matrix<S>; 10] {
        [
            &self.u_z, &self.u_r, &self.u_w, &self.v_z, &self.v_r, &self.v_w, &self.b_z,
            &self.b_r, &self.b_w, &self.scores,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix<S>; 10] {
        [
            &mut self.u_z, &mut self.u_r, &mut self.u_w, &mut self.v_z, &mut self.v_r,
            &mut self.v_w, &mut self.b_z, &mut self.b_r, &mut self.b_w, &mut self.scores,
        ]
    }

    pub fn leaves(&self, tape: &mut Tape<S>) -> WeightGruNodes {
        WeightGruNodes {
            u_z: tape.leaf(self.u_z.clone()),
            u_r: tape.leaf(self.u_r.clone()),
            u_w: tape.leaf(self.u_w.clone()),
            v_z: tape.leaf(self.v_z.clone()),
            v_r: tape.leaf(self.v_r.clone()),
            v_w: tape.leaf(self.v_w.clone()),
            b_z: tape.leaf(self.b_z.clone()),
            b_r: tape.leaf(self.b_r.clone()),
            b_w: tape.leaf(self.b_w.clone()),
            scores: tape.leaf(self.scores.clone()),
        }
    }
}

/// Tape handles for one layer's weight GRU.
#[derive(Clone, Copy, Debug)]
pub struct WeightGruNodes {
    pub u_z: NodeId,
    pub u_r: NodeId,
    pub u_w: NodeId,
    pub v_z: NodeId,
    pub v_r: NodeId,
    pub v_w: NodeId,
    pub b_z: NodeId,
    pub b_r: NodeId,
    pub b_w: NodeId,
    pub scores: NodeId,
}

impl WeightGruNodes {
    pub fn ids(&self) -> [NodeId; 10] {
        [
            self.u_z, self.u_r, self.u_w, self.v_z, self.v_r, self.v_w, self.b_z, self.b_r,
            self.b_w, self.scores,
        ]
    }
}

/// One graph convolution: `LeakyReLU(A_hat * F * W)`.
pub fn gcn_layer<S: Scalar>(
    tape: &mut Tape<S>,
    features: NodeId,
    a_hat: NodeId,
    weights: NodeId,
    slope: S,
) -> Result<NodeId> {
    let agg = tape.matmul(a_hat, features)?;
    let pre = tape.matmul(agg, weights)?;
    Ok(tape.leaky_relu(pre, slope))
}

/// Top-k row summary of a feature matrix: rows are ranked by `F * scores`
/// (ties broken toward the lower node id) and each selected row is scaled by
/// tanh of its score. The result is k x d, so its transpose matches a
/// d x k weight matrix inside the gate sums.
pub fn summarize_features<S: Scalar>(
    tape: &mut Tape<S>,
    features: NodeId,
    k: usize,
    scores: NodeId,
) -> Result<NodeId> {
    let n = tape.value(features).rows();
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "summary size k = {k} exceeds node count {n}"
        )));
    }
    let raw = tape.matmul(features, scores)?; // n x 1
    let mut order: Vec<usize> = (0..n).collect();
    let vals = tape.value(raw).clone();
    order.sort_by(|&a, &b| {
        vals.get(b, 0)
            .partial_cmp(&vals.get(a, 0))
            .unwrap()
            .then(a.cmp(&b))
    });
    let picked: Vec<usize> = order.into_iter().take(k).collect();
    let gates = tape.tanh(raw);
    let sel_rows = tape.gather_rows(features, picked.clone())?;
    let sel_gates = tape.gather_rows(gates, picked)?;
    tape.mul_col_broadcast(sel_rows, sel_gates)
}

/// Matrix-GRU weight update. With the feature summary present:
/// `Z = sigmoid(U_Z W + V_Z S^T + B_Z)`, `R` likewise,
/// `W_hat = tanh(U_W (R .* W) + V_W S^T + B_W)`,
/// result `(1 - Z) .* W_hat + Z .* W`.
pub fn evolve_weights<S: Scalar>(
    tape: &mut Tape<S>,
    w_prev: NodeId,
    f_summary: Option<NodeId>,
    gru: &WeightGruNodes,
) -> Result<NodeId> {
    let feat = match f_summary {
        Some(s) => Some(tape.transpose(s)),
        None => None,
    };
    let gate = |tape: &mut Tape<S>, u: NodeId, v: NodeId, b: NodeId, state: NodeId| {
        let mut pre = tape.matmul(u, state)?;
        if let Some(ft) = feat {
            let vf = tape.matmul(v, ft)?;
            pre = tape.add(pre, vf)?;
        }
        tape.add(pre, b)
    };
    let z_pre = gate(tape, gru.u_z, gru.v_z, gru.b_z, w_prev)?;
    let z = tape.sigmoid(z_pre);
    let r_pre = gate(tape, gru.u_r, gru.v_r, gru.b_r, w_prev)?;
    let r = tape.sigmoid(r_pre);
    let reset = tape.hadamard(r, w_prev)?;
    let cand_pre = gate(tape, gru.u_w, gru.v_w, gru.b_w, reset)?;
    let w_hat = tape.tanh(cand_pre);
    let keep = tape.hadamard(z, w_prev)?;
    let one_minus_z = tape.one_minus(z);
    let blended = tape.hadamard(one_minus_z, w_hat)?;
    tape.add(blended, keep)
}

/// Output of one snapshot's spatial pass.
pub struct SpatialStep {
    /// Final-layer features, n x d_L.
    pub features: NodeId,
    /// Evolved per-layer weights, to feed the next snapshot.
    pub weights: Vec<NodeId>,
}

/// Runs the full stack for one snapshot. For each layer, first evolve that
/// layer's weights from the previous snapshot's (driven by a summary of the
/// layer's input features), then convolve. `grus = None` freezes the weights
/// (the static-weight ablations).
pub fn spatial_forward<S: Scalar>(
    tape: &mut Tape<S>,
    a_hat: NodeId,
    f0: NodeId,
    w_prev: &[NodeId],
    grus: Option<&[WeightGruNodes]>,
    cfg: &GcnConfig,
) -> Result<SpatialStep> {
    let layers = cfg.layer_count();
    if w_prev.len() != layers {
        return Err(Error::LengthMismatch(format!(
            "{} weight matrices for {layers} layers",
            w_prev.len()
        )));
    }
    if let Some(g) = grus {
        if g.len() != layers {
            return Err(Error::LengthMismatch(format!(
                "{} weight GRUs for {layers} layers",
                g.len()
            )));
        }
    }
    let slope = S::from_f64(cfg.leaky_slope);
    let mut features = f0;
    let mut weights = Vec::with_capacity(layers);
    for l in 0..layers {
        let w_t = match grus {
            Some(g) => {
                let summary = if cfg.use_feature_term {
                    Some(summarize_features(tape, features, cfg.dims[l + 1], g[l].scores)?)
                } else {
                    None
                };
                evolve_weights(tape, w_prev[l], summary, &g[l])?
            }
            None => w_prev[l],
        };
        features = gcn_layer(tape, features, a_hat, w_t, slope)?;
        weights.push(w_t);
    }
    Ok(SpatialStep { features, weights })
}
