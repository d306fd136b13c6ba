//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every primitive op applied during a forward pass; the
//! backward pass replays the record in exact reverse order, accumulating
//! gradients into every node. One training step builds one tape — nodes are
//! append-only and referenced by [`NodeId`].

use crate::error::{Error, Result};
use crate::num::{Matrix, Scalar};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op<S> {
    Leaf,
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    /// matrix (n x c) + row (1 x c), broadcast over rows
    AddRowBroadcast(NodeId, NodeId),
    /// matrix (n x c) scaled per row by col (n x 1)
    MulColBroadcast(NodeId, NodeId),
    Scale(NodeId, S),
    AddScalar(NodeId, S),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    LeakyRelu(NodeId, S),
    Transpose(NodeId),
    GatherRows(NodeId, Vec<usize>),
    RowSum(NodeId),
    MeanAll(NodeId),
}

struct TapeNode<S> {
    value: Matrix<S>,
    op: Op<S>,
}

/// Append-only record of a forward computation.
pub struct Tape<S: Scalar> {
    nodes: Vec<TapeNode<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix<S> {
        &self.nodes[id.0].value
    }

    /// Value of a 1x1 node as a plain scalar.
    pub fn scalar(&self, id: NodeId) -> S {
        let v = self.value(id);
        assert_eq!(v.shape(), (1, 1), "scalar() on non-1x1 node");
        v.get(0, 0)
    }

    fn push(&mut self, value: Matrix<S>, op: Op<S>) -> NodeId {
        debug_assert!(value.is_finite(), "tape op produced non-finite values");
        self.nodes.push(TapeNode { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Inserts an input or parameter. Gradients accumulate into leaves like
    /// any other node; callers read them back by id after `backward`.
    pub fn leaf(&mut self, value: Matrix<S>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::Matmul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).sub(self.value(b))?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(v, Op::Hadamard(a, b)))
    }

    /// `a + row`, with `row` (shape 1 x a.cols) added to every row of `a`.
    pub fn add_row_broadcast(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (m, r) = (self.value(a), self.value(row));
        if r.rows() != 1 || r.cols() != m.cols() {
            return Err(shape_err("add_row_broadcast", m, r));
        }
        let mut out = m.clone();
        for i in 0..out.rows() {
            for j in 0..out.cols() {
                let v = out.get(i, j) + r.get(0, j);
                out.set(i, j, v);
            }
        }
        Ok(self.push(out, Op::AddRowBroadcast(a, row)))
    }

    /// Scales row `i` of `a` by `col[i]` (shape n x 1).
    pub fn mul_col_broadcast(&mut self, a: NodeId, col: NodeId) -> Result<NodeId> {
        let (m, c) = (self.value(a), self.value(col));
        if c.cols() != 1 || c.rows() != m.rows() {
            return Err(shape_err("mul_col_broadcast", m, c));
        }
        let mut out = m.clone();
        for i in 0..out.rows() {
            let s = c.get(i, 0);
            for j in 0..out.cols() {
                let v = out.get(i, j) * s;
                out.set(i, j, v);
            }
        }
        Ok(self.push(out, Op::MulColBroadcast(a, col)))
    }

    pub fn scale(&mut self, a: NodeId, c: S) -> NodeId {
        let v = self.value(a).scale(c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: NodeId, c: S) -> NodeId {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddScalar(a, c))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        let neg = self.scale(a, -S::one());
        self.add_scalar(neg, S::one())
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(Scalar::sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x.tanh());
        self.push(v, Op::Tanh(a))
    }

    /// Hinge nonlinearity max(x, 0); subgradient 0 at 0.
    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| if x > S::zero() { x } else { S::zero() });
        self.push(v, Op::Relu(a))
    }

    /// max(x, slope*x); subgradient at 0 is `slope`.
    pub fn leaky_relu(&mut self, a: NodeId, slope: S) -> NodeId {
        let v = self.value(a).map(|x| if x > S::zero() { x } else { slope * x });
        self.push(v, Op::LeakyRelu(a, slope))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    /// Stacks `indices.len()` rows of `a` (repeats allowed) into a new matrix.
    pub fn gather_rows(&mut self, a: NodeId, indices: Vec<usize>) -> Result<NodeId> {
        let m = self.value(a);
        let cols = m.cols();
        let mut out = Matrix::zeros(indices.len(), cols);
        for (r, &i) in indices.iter().enumerate() {
            if i >= m.rows() {
                return Err(Error::InvalidConfig(format!(
                    "gather_rows: row {i} out of range for {} rows",
                    m.rows()
                )));
            }
            for j in 0..cols {
                out.set(r, j, m.get(i, j));
            }
        }
        Ok(self.push(out, Op::GatherRows(a, indices)))
    }

    /// Per-row sum, shape (n x 1).
    pub fn row_sum(&mut self, a: NodeId) -> NodeId {
        let m = self.value(a);
        let mut out = Matrix::zeros(m.rows(), 1);
        for i in 0..m.rows() {
            out.set(i, 0, m.row(i).iter().copied().sum());
        }
        self.push(out, Op::RowSum(a))
    }

    /// Mean over all entries, shape (1 x 1).
    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let m = self.value(a);
        let n = S::from_f64((m.rows() * m.cols()) as f64);
        let total: S = m.data().iter().copied().sum();
        let out = Matrix::new(1, 1, vec![total / n]).unwrap();
        self.push(out, Op::MeanAll(a))
    }

    /// Runs the backward pass from a scalar (1x1) output node.
    pub fn backward(&self, output: NodeId) -> Result<Gradients<S>> {
        if self.value(output).shape() != (1, 1) {
            let (r, c) = self.value(output).shape();
            return Err(Error::InvalidConfig(format!(
                "backward target must be 1x1, got {r}x{c}"
            )));
        }
        let mut grads: Vec<Option<Matrix<S>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Matrix::filled(1, 1, S::one()));

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::Matmul(a, b) => {
                    let da = g.matmul(&self.value(*b).transpose())?;
                    let db = self.value(*a).transpose().matmul(&g)?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g)?;
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.scale(-S::one()))?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Hadamard(a, b) => {
                    let da = g.hadamard(self.value(*b))?;
                    let db = g.hadamard(self.value(*a))?;
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::AddRowBroadcast(a, row) => {
                    let mut drow = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            let v = drow.get(0, j) + g.get(i, j);
                            drow.set(0, j, v);
                        }
                    }
                    accumulate(&mut grads, *row, drow)?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::MulColBroadcast(a, col) => {
                    let av = self.value(*a);
                    let cv = self.value(*col);
                    let mut da = g.clone();
                    let mut dcol = Matrix::zeros(cv.rows(), 1);
                    for i in 0..g.rows() {
                        let s = cv.get(i, 0);
                        let mut dot = S::zero();
                        for j in 0..g.cols() {
                            dot += g.get(i, j) * av.get(i, j);
                            let v = da.get(i, j) * s;
                            da.set(i, j, v);
                        }
                        dcol.set(i, 0, dot);
                    }
                    accumulate(&mut grads, *a, da)?;
                    accumulate(&mut grads, *col, dcol)?;
                }
                Op::Scale(a, c) => accumulate(&mut grads, *a, g.scale(*c))?,
                Op::AddScalar(a, _) => accumulate(&mut grads, *a, g)?,
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let da = Matrix::from_fn(y.rows(), y.cols(), |i, j| {
                        let s = y.get(i, j);
                        g.get(i, j) * s * (S::one() - s)
                    });
                    accumulate(&mut grads, *a, da)?;
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let da = Matrix::from_fn(y.rows(), y.cols(), |i, j| {
                        let t = y.get(i, j);
                        g.get(i, j) * (S::one() - t * t)
                    });
                    accumulate(&mut grads, *a, da)?;
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let da = Matrix::from_fn(x.rows(), x.cols(), |i, j| {
                        if x.get(i, j) > S::zero() {
                            g.get(i, j)
                        } else {
                            S::zero()
                        }
                    });
                    accumulate(&mut grads, *a, da)?;
                }
                Op::LeakyRelu(a, slope) => {
                    let x = self.value(*a);
                    let da = Matrix::from_fn(x.rows(), x.cols(), |i, j| {
                        if x.get(i, j) > S::zero() {
                            g.get(i, j)
                        } else {
                            g.get(i, j) * *slope
                        }
                    });
                    accumulate(&mut grads, *a, da)?;
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, g.transpose())?,
                Op::GatherRows(a, indices) => {
                    let src = self.value(*a);
                    let mut da = Matrix::zeros(src.rows(), src.cols());
                    for (r, &i) in indices.iter().enumerate() {
                        for j in 0..g.cols() {
                            let v = da.get(i, j) + g.get(r, j);
                            da.set(i, j, v);
                        }
                    }
                    accumulate(&mut grads, *a, da)?;
                }
                Op::RowSum(a) => {
                    let src = self.value(*a);
                    let da = Matrix::from_fn(src.rows(), src.cols(), |i, _| g.get(i, 0));
                    accumulate(&mut grads, *a, da)?;
                }
                Op::MeanAll(a) => {
                    let src = self.value(*a);
                    let scale = g.get(0, 0) / S::from_f64((src.rows() * src.cols()) as f64);
                    accumulate(&mut grads, *a, Matrix::filled(src.rows(), src.cols(), scale))?;
                }
            }
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { grads, shapes })
    }
}

fn shape_err<S: Scalar>(op: &'static str, a: &Matrix<S>, b: &Matrix<S>) -> Error {
    Error::ShapeMismatch {
        op,
        left_rows: a.rows(),
        left_cols: a.cols(),
        right_rows: b.rows(),
        right_cols: b.cols(),
    }
}

fn accumulate<S: Scalar>(
    grads: &mut [Option<Matrix<S>>],
    id: NodeId,
    delta: Matrix<S>,
) -> Result<()> {
    match &mut grads[id.0] {
        Some(existing) => *existing = existing.add(&delta)?,
        slot @ None => *slot = Some(delta),
    }
    Ok(())
}

/// Accumulated gradients from one backward pass.
pub struct Gradients<S> {
    grads: Vec<Option<Matrix<S>>>,
    shapes: Vec<(usize, usize)>,
}

impl<S: Scalar> Gradients<S> {
    /// Gradient with respect to `id`; zero matrix when the node did not
    /// contribute to the output.
    pub fn wrt(&self, id: NodeId) -> Matrix<S> {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[id.0];
                Matrix::zeros(r, c)
            }
        }
    }
}
