//! Define-by-run reverse-mode autodiff over [`Matrix`] values.
//!
//! Every operation appends a node to the [`Tape`]; node ids are issued in
//! increasing order so inputs always precede outputs, and [`Tape::backward`]
//! is a single reverse sweep. A tape lives for one forward/backward pass.

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Pointwise unary maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryOp {
    Scale(f64),
    Tanh,
    Sigmoid,
    Relu,
    Abs,
    /// `ln(1 + eˣ)`, evaluated without overflow.
    Softplus,
}

impl UnaryOp {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryOp::Scale(c) => c * x,
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Sigmoid => sigmoid(x),
            UnaryOp::Relu => x.max(0.0),
            UnaryOp::Abs => x.abs(),
            UnaryOp::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
        }
    }

    /// Derivative at `x`, given the forward output `y`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            UnaryOp::Scale(c) => c,
            UnaryOp::Tanh => 1.0 - y * y,
            UnaryOp::Sigmoid => y * (1.0 - y),
            // relu'(0) = 0
            UnaryOp::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UnaryOp::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            UnaryOp::Softplus => sigmoid(x),
        }
    }

    pub fn apply_matrix(self, a: &Matrix) -> Matrix {
        a.map(|x| self.apply(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

impl BinaryOp {
    pub fn apply_matrix(self, a: &Matrix, b: &Matrix) -> Result<Matrix> {
        match self {
            BinaryOp::Add => a.add(b),
            BinaryOp::Sub => a.sub(b),
            BinaryOp::Mul => a.hadamard(b),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Backward rule of a custom node: maps the upstream gradient (shaped like
/// the node's value) to one gradient per input.
pub type BackwardRule = Box<dyn Fn(&Matrix) -> Vec<Matrix>>;

enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Unary(UnaryOp, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
    /// `a + 1·bias` with `bias` a single row.
    AddRow(NodeId, NodeId),
    Sum(NodeId),
    Mean(NodeId),
    Reshape(NodeId),
    VStack(Vec<NodeId>),
    HStack(Vec<NodeId>),
    Custom {
        name: String,
        inputs: Vec<NodeId>,
        rule: BackwardRule,
    },
}

struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("nodes", &self.nodes.len()).finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Records an input (parameter or constant).
    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn unary(&mut self, op: UnaryOp, a: NodeId) -> NodeId {
        let v = op.apply_matrix(self.value(a));
        self.push(v, Op::Unary(op, a))
    }

    pub fn binary(&mut self, op: BinaryOp, a: NodeId, b: NodeId) -> Result<NodeId> {
        let v = op.apply_matrix(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::Binary(op, a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.unary(UnaryOp::Scale(c), a)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(UnaryOp::Tanh, a)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(UnaryOp::Sigmoid, a)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.unary(UnaryOp::Relu, a)
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.unary(UnaryOp::Abs, a)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        self.unary(UnaryOp::Softplus, a)
    }

    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(Error::dim("add_row", av.shape(), bv.shape()));
        }
        let b = bv.row(0);
        let v = Matrix::from_fn(av.rows(), av.cols(), |i, j| av.get(i, j) + b[j]);
        Ok(self.push(v, Op::AddRow(a, bias)))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Matrix::filled(1, 1, self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let v = Matrix::filled(1, 1, self.value(a).mean());
        self.push(v, Op::Mean(a))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let v = self.value(a).reshape(rows, cols)?;
        Ok(self.push(v, Op::Reshape(a)))
    }

    pub fn vstack(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Matrix::vstack(&mats)?;
        Ok(self.push(v, Op::VStack(parts.to_vec())))
    }

    pub fn hstack(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Matrix::hstack(&mats)?;
        Ok(self.push(v, Op::HStack(parts.to_vec())))
    }

    /// Records a node whose value was computed outside the tape. `rule` must
    /// return one gradient per input, each shaped like that input; this is
    /// checked during [`Tape::backward`].
    pub fn custom(
        &mut self,
        name: impl Into<String>,
        value: Matrix,
        inputs: &[NodeId],
        rule: BackwardRule,
    ) -> NodeId {
        self.push(
            value,
            Op::Custom {
                name: name.into(),
                inputs: inputs.to_vec(),
                rule,
            },
        )
    }

    /// Reverse sweep from a scalar node. Contributions from a node used by
    /// several consumers are summed.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::contract(format!(
                "backward needs a 1x1 loss, got {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::ones(1, 1));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].clone() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b))?;
                    let gb = self.value(*a).t_matmul(&g)?;
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::Unary(op, a) => {
                    let x = self.value(*a);
                    let y = &node.value;
                    let ga = Matrix::new(
                        x.rows(),
                        x.cols(),
                        x.data()
                            .iter()
                            .zip(y.data())
                            .zip(g.data())
                            .map(|((&x, &y), &g)| g * op.derivative(x, y))
                            .collect(),
                    )?;
                    accumulate(&mut grads, *a, ga)?;
                }
                Op::Binary(op, a, b) => {
                    let (ga, gb) = match op {
                        BinaryOp::Add => (g.clone(), g),
                        BinaryOp::Sub => (g.clone(), g.scale(-1.0)),
                        BinaryOp::Mul => (g.hadamard(self.value(*b))?, g.hadamard(self.value(*a))?),
                    };
                    accumulate(&mut grads, *a, ga)?;
                    accumulate(&mut grads, *b, gb)?;
                }
                Op::AddRow(a, bias) => {
                    let gb = Matrix::from_fn(1, g.cols(), |_, j| (0..g.rows()).map(|i| g.get(i, j)).sum());
                    accumulate(&mut grads, *bias, gb)?;
                    accumulate(&mut grads, *a, g)?;
                }
                Op::Sum(a) => {
                    let (r, c) = self.value(*a).shape();
                    accumulate(&mut grads, *a, Matrix::filled(r, c, g.get(0, 0)))?;
                }
                Op::Mean(a) => {
                    let (r, c) = self.value(*a).shape();
                    let n = (r * c) as f64;
                    accumulate(&mut grads, *a, Matrix::filled(r, c, g.get(0, 0) / n))?;
                }
                Op::Reshape(a) => {
                    let (r, c) = self.value(*a).shape();
                    accumulate(&mut grads, *a, g.reshape(r, c)?)?;
                }
                Op::VStack(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let rows = self.value(*p).rows();
                        accumulate(&mut grads, *p, g.row_block(start, start + rows))?;
                        start += rows;
                    }
                }
                Op::HStack(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let cols = self.value(*p).cols();
                        accumulate(&mut grads, *p, g.col_block(start, start + cols))?;
                        start += cols;
                    }
                }
                Op::Custom { name, inputs, rule } => {
                    let input_grads = rule(&g);
                    if input_grads.len() != inputs.len() {
                        return Err(Error::contract(format!(
                            "custom node `{name}` returned {} gradients for {} inputs",
                            input_grads.len(),
                            inputs.len()
                        )));
                    }
                    for (input, gi) in inputs.iter().zip(input_grads) {
                        let want = self.value(*input).shape();
                        if gi.shape() != want {
                            return Err(Error::contract(format!(
                                "custom node `{name}` returned a {:?} gradient for a {:?} input",
                                gi.shape(),
                                want
                            )));
                        }
                        accumulate(&mut grads, *input, gi)?;
                    }
                }
            }
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { grads, shapes })
    }
}

fn accumulate(grads: &mut [Option<Matrix>], id: NodeId, g: Matrix) -> Result<()> {
    match &mut grads[id.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Gradients produced by [`Tape::backward`], indexed by node.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of `id`; nodes the loss does not depend on get zeros.
    pub fn get(&self, id: NodeId) -> Matrix {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[id.0];
                Matrix::zeros(r, c)
            }
        }
    }

    pub fn try_get(&self, id: NodeId) -> Option<&Matrix> {
        self.grads[id.0].as_ref()
    }
}
