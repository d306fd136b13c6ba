//! Temporal encoder: a shared GRU applied to each node's embedding row,
//! sequentially over snapshots, smoothing spatial embeddings into the hidden
//! states that clustering consumes.
//!
//! Gates (per node row f, previous hidden h):
//!   r = sigmoid(f W_r + h U_r + B_r)
//!   z = sigmoid(f W_z + h U_z + B_z)
//!   h_hat = tanh(r .* (h U_h) + f W_h + B_h)
//!   h' = (1 - z) .* h + z .* h_hat
//!
//! Note the last line's convention: the update gate scales the new state.
//! This mirrors the gate form the hidden sequence is defined with, which is
//! the opposite orientation from the weight-evolution GRU.

use crate::error::{Error, Result};
use crate::num::{glorot_uniform, Matrix, NodeId, Prng, Scalar, Tape};

/// Temporal GRU parameters; shared across all nodes and snapshots.
/// Input rows have width `d`, hidden rows width `d_h`.
#[derive(Clone, Debug)]
pub struct TemporalGruParams<S> {
    pub w_r: Matrix<S>,
    pub w_z: Matrix<S>,
    pub w_h: Matrix<S>,
    pub u_r: Matrix<S>,
    pub u_z: Matrix<S>,
    pub u_h: Matrix<S>,
    pub b_r: Matrix<S>,
    pub b_z: Matrix<S>,
    pub b_h: Matrix<S>,
}

impl<S: Scalar> TemporalGruParams<S> {
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut Prng) -> Self {
        Self {
            w_r: glorot_uniform(input_dim, hidden_dim, rng),
            w_z: glorot_uniform(input_dim, hidden_dim, rng),
            w_h: glorot_uniform(input_dim, hidden_dim, rng),
            u_r: glorot_uniform(hidden_dim, hidden_dim, rng),
            u_z: glorot_uniform(hidden_dim, hidden_dim, rng),
            u_h: glorot_uniform(hidden_dim, hidden_dim, rng),
            b_r: Matrix::zeros(1, hidden_dim),
            // the update gate scales the new state here; a positive bias lets
            // hidden states track fresh inputs from the zero start
            b_z: Matrix::filled(1, hidden_dim, S::from_f64(1.0)),
            b_h: Matrix::zeros(1, hidden_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.u_r.rows()
    }

    pub fn matrices(&self) -> [&Matrix<S>; 9] {
        [
            &self.w_r, &self.w_z, &self.w_h, &self.u_r, &self.u_z, &self.u_h, &self.b_r,
            &self.b_z, &self.b_h,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix<S>; 9] {
        [
            &mut self.w_r, &mut self.w_z, &mut self.w_h, &mut self.u_r, &mut self.u_z,
            &mut self.u_h, &mut self.b_r, &mut self.b_z, &mut self.b_h,
        ]
    }

    pub fn leaves(&self, tape: &mut Tape<S>) -> TemporalGruNodes {
        TemporalGruNodes {
            w_r: tape.leaf(self.w_r.clone()),
            w_z: tape.leaf(self.w_z.clone()),
            w_h: tape.leaf(self.w_h.clone()),
            u_r: tape.leaf(self.u_r.clone()),
            u_z: tape.leaf(self.u_z.clone()),
            u_h: tape.leaf(self.u_h.clone()),
            b_r: tape.leaf(self.b_r.clone()),
            b_z: tape.leaf(self.b_z.clone()),
            b_h: tape.leaf(self.b_h.clone()),
        }
    }
}

/// Tape handles for the temporal GRU parameters.
#[derive(Clone, Copy, Debug)]
pub struct TemporalGruNodes {
    pub w_r: NodeId,
    pub w_z: NodeId,
    pub w_h: NodeId,
    pub u_r: NodeId,
    pub u_z: NodeId,
    pub u_h: NodeId,
    pub b_r: NodeId,
    pub b_z: NodeId,
    pub b_h: NodeId,
}

impl TemporalGruNodes {
    pub fn ids(&self) -> [NodeId; 9] {
        [
            self.w_r, self.w_z, self.w_h, self.u_r, self.u_z, self.u_h, self.b_r, self.b_z,
            self.b_h,
        ]
    }
}

/// One GRU step. Rows are independent: passing an n x d matrix applies the
/// cell to every node row at once with shared parameters.
pub fn gru_cell<S: Scalar>(
    tape: &mut Tape<S>,
    input: NodeId,
    h_prev: NodeId,
    gru: &TemporalGruNodes,
) -> Result<NodeId> {
    let gate = |tape: &mut Tape<S>, w: NodeId, u: NodeId, b: NodeId| -> Result<NodeId> {
        let fw = tape.matmul(input, w)?;
        let hu = tape.matmul(h_prev, u)?;
        let sum = tape.add(fw, hu)?;
        tape.add_row_broadcast(sum, b)
    };
    let r_pre = gate(tape, gru.w_r, gru.u_r, gru.b_r)?;
    let r = tape.sigmoid(r_pre);
    let z_pre = gate(tape, gru.w_z, gru.u_z, gru.b_z)?;
    let z = tape.sigmoid(z_pre);

    let hu = tape.matmul(h_prev, gru.u_h)?;
    let gated = tape.hadamard(r, hu)?;
    let fw = tape.matmul(input, gru.w_h)?;
    let cand_sum = tape.add(gated, fw)?;
    let cand_pre = tape.add_row_broadcast(cand_sum, gru.b_h)?;
    let h_hat = tape.tanh(cand_pre);

    let one_minus_z = tape.one_minus(z);
    let keep = tape.hadamard(one_minus_z, h_prev)?;
    let take = tape.hadamard(z, h_hat)?;
    tape.add(keep, take)
}

/// Unrolls the GRU over the embedding sequence with h_0 = 0, returning every
/// hidden state h_1..h_T.
pub fn temporal_forward<S: Scalar>(
    tape: &mut Tape<S>,
    embeddings: &[NodeId],
    gru: &TemporalGruNodes,
) -> Result<Vec<NodeId>> {
    let Some(&first) = embeddings.first() else {
        return Err(Error::LengthMismatch("temporal_forward needs at least one snapshot".into()));
    };
    let shape = tape.value(first).shape();
    for &f in embeddings {
        if tape.value(f).shape() != shape {
            let (r, c) = tape.value(f).shape();
            return Err(Error::ShapeMismatch {
                op: "temporal_forward",
                left_rows: shape.0,
                left_cols: shape.1,
                right_rows: r,
                right_cols: c,
            });
        }
    }
    let n = shape.0;
    let d_h = tape.value(gru.u_r).rows();
    let mut h = tape.leaf(Matrix::zeros(n, d_h));
    let mut out = Vec::with_capacity(embeddings.len());
    for &f in embeddings {
        h = gru_cell(tape, f, h, gru)?;
        out.push(h);
    }
    Ok(out)
}
