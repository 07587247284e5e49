//! Eagerly-evaluated operation tape for reverse-mode differentiation.
//!
//! Every operation appends a node whose inputs precede it, so the sequence
//! is topologically ordered by construction and a single reverse sweep
//! visits each node exactly once. Gradients are emitted as *new nodes on
//! the same tape*, which makes them differentiable in turn; the
//! gradient-penalty objective relies on that second derivative.

use std::collections::BTreeMap;

use crate::conv;
use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub type NodeId = usize;

#[derive(Clone, Debug)]
enum Op {
    Leaf { requires_grad: bool },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Sqrt(NodeId),
    Square(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Relu(NodeId),
    LeakyRelu(NodeId, f64),
    Clamp(NodeId, f64, f64),
    /// Reduce everything to a scalar.
    SumAll(NodeId),
    /// Broadcast a scalar to a full shape.
    FillLike(NodeId),
    /// `N x C x H x W -> C`
    SumChan(NodeId),
    /// `C -> N x C x H x W`
    BcastChan(NodeId),
    /// `N x C x H x W -> N x C`
    SumSpatial(NodeId),
    /// `N x C -> N x C x H x W`
    BcastSpatial(NodeId),
    /// `N x ... -> N`
    SumPerSample(NodeId),
    /// `N -> N x ...`
    BcastPerSample(NodeId),
    Reshape(NodeId),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Conv2d { x: NodeId, w: NodeId, stride: usize, pad: usize },
    ConvT2d { x: NodeId, w: NodeId, stride: usize, pad: usize },
    ConvWGrad { x: NodeId, g: NodeId, stride: usize, pad: usize },
}

impl Op {
    fn inputs(&self) -> [Option<NodeId>; 2] {
        use Op::*;
        match *self {
            Leaf { .. } => [None, None],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | MatMul(a, b) => [Some(a), Some(b)],
            Neg(a) | Scale(a, _) | AddScalar(a) | Exp(a) | Log(a) | Sqrt(a) | Square(a)
            | Tanh(a) | Sigmoid(a) | Relu(a) | LeakyRelu(a, _) | Clamp(a, _, _) | SumAll(a)
            | FillLike(a) | SumChan(a) | BcastChan(a) | SumSpatial(a) | BcastSpatial(a)
            | SumPerSample(a) | BcastPerSample(a) | Reshape(a) | Transpose(a) => [Some(a), None],
            Conv2d { x, w, .. } | ConvT2d { x, w, .. } => [Some(x), Some(w)],
            ConvWGrad { x, g, .. } => [Some(x), Some(g)],
        }
    }
}

struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
}

/// Gradients for the `requires_grad` leaves of a tape, keyed by leaf id.
#[derive(Debug)]
pub struct Gradients {
    grads: BTreeMap<NodeId, Tensor>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor> {
        self.grads.remove(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &Tensor)> {
        self.grads.iter().map(|(k, v)| (*k, v))
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grad_leaves: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id].value.shape()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let needs_grad = match op {
            Op::Leaf { requires_grad } => requires_grad,
            _ => op
                .inputs()
                .iter()
                .flatten()
                .any(|&i| self.nodes[i].needs_grad),
        };
        self.nodes.push(Node { op, value, needs_grad });
        self.nodes.len() - 1
    }

    /// Record an input tensor. Gradients are produced only for leaves
    /// created with `requires_grad = true`.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        let id = self.push(Op::Leaf { requires_grad }, value);
        if requires_grad {
            self.grad_leaves.push(id);
        }
        id
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(TensorError::shape(op, format!("operand shapes {sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn zip_map(&self, a: NodeId, b: NodeId, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (ta, tb) = (&self.nodes[a].value, &self.nodes[b].value);
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data).expect("zip_map preserves shape")
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let v = self.zip_map(a, b, |x, y| x + y);
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let v = self.zip_map(a, b, |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let v = self.zip_map(a, b, |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("div", a, b)?;
        let v = self.zip_map(a, b, |x, y| x / y);
        Ok(self.push(Op::Div(a, b), v))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(|x| -x);
        self.push(Op::Neg(a), v)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.nodes[a].value.map(|x| c * x);
        self.push(Op::Scale(a, c), v)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.nodes[a].value.map(|x| x + c);
        self.push(Op::AddScalar(a), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(f64::exp);
        self.push(Op::Exp(a), v)
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(f64::ln);
        self.push(Op::Log(a), v)
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(f64::sqrt);
        self.push(Op::Sqrt(a), v)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(|x| x * x);
        self.push(Op::Square(a), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(Op::Sigmoid(a), v)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.map(|x| x.max(0.0));
        self.push(Op::Relu(a), v)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        let v = self.nodes[a].value.map(|x| if x > 0.0 { x } else { slope * x });
        self.push(Op::LeakyRelu(a, slope), v)
    }

    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> NodeId {
        let v = self.nodes[a].value.map(|x| x.clamp(lo, hi));
        self.push(Op::Clamp(a, lo, hi), v)
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.nodes[a].value.data().iter().sum());
        self.push(Op::SumAll(a), v)
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let n = self.nodes[a].value.elems() as f64;
        let s = self.sum_all(a);
        self.scale(s, 1.0 / n)
    }

    /// Broadcast a scalar node to `shape`.
    pub fn fill_like(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let s = self.nodes[a].value.scalar_value()?;
        let v = Tensor::full(shape, s);
        Ok(self.push(Op::FillLike(a), v))
    }

    pub fn sum_chan(&mut self, a: NodeId) -> Result<NodeId> {
        let (n, c, h, w) = self.nodes[a].value.dims4()?;
        let d = self.nodes[a].value.data();
        let mut out = vec![0.0; c];
        for ni in 0..n {
            for (ci, o) in out.iter_mut().enumerate() {
                let plane = &d[(ni * c + ci) * h * w..(ni * c + ci + 1) * h * w];
                *o += plane.iter().sum::<f64>();
            }
        }
        Ok(self.push(Op::SumChan(a), Tensor::from_vec(out)))
    }

    pub fn bcast_chan(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let c_in = match self.shape(a) {
            [c] => *c,
            s => return Err(TensorError::shape("bcast_chan", format!("expected rank-1 input, got {s:?}"))),
        };
        let [n, c, h, w] = match shape {
            [n, c, h, w] => [*n, *c, *h, *w],
            _ => return Err(TensorError::shape("bcast_chan", format!("expected rank-4 target, got {shape:?}"))),
        };
        if c != c_in {
            return Err(TensorError::shape("bcast_chan", format!("channel axis {c_in} vs target {c}")));
        }
        let src = self.nodes[a].value.data().to_vec();
        let mut out = vec![0.0; n * c * h * w];
        for ni in 0..n {
            for (ci, &s) in src.iter().enumerate() {
                out[(ni * c + ci) * h * w..(ni * c + ci + 1) * h * w].fill(s);
            }
        }
        Ok(self.push(Op::BcastChan(a), Tensor::new(shape.to_vec(), out)?))
    }

    pub fn sum_spatial(&mut self, a: NodeId) -> Result<NodeId> {
        let (n, c, h, w) = self.nodes[a].value.dims4()?;
        let d = self.nodes[a].value.data();
        let mut out = vec![0.0; n * c];
        for (i, o) in out.iter_mut().enumerate() {
            *o = d[i * h * w..(i + 1) * h * w].iter().sum();
        }
        Ok(self.push(Op::SumSpatial(a), Tensor::new(vec![n, c], out)?))
    }

    pub fn bcast_spatial(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let (n_in, c_in) = self.nodes[a].value.dims2()?;
        let [n, c, h, w] = match shape {
            [n, c, h, w] => [*n, *c, *h, *w],
            _ => return Err(TensorError::shape("bcast_spatial", format!("expected rank-4 target, got {shape:?}"))),
        };
        if (n, c) != (n_in, c_in) {
            return Err(TensorError::shape(
                "bcast_spatial",
                format!("leading axes ({n_in},{c_in}) vs target ({n},{c})"),
            ));
        }
        let src = self.nodes[a].value.data().to_vec();
        let mut out = vec![0.0; n * c * h * w];
        for (i, &s) in src.iter().enumerate() {
            out[i * h * w..(i + 1) * h * w].fill(s);
        }
        Ok(self.push(Op::BcastSpatial(a), Tensor::new(shape.to_vec(), out)?))
    }

    pub fn sum_per_sample(&mut self, a: NodeId) -> Result<NodeId> {
        let shape = self.shape(a);
        if shape.is_empty() {
            return Err(TensorError::shape("sum_per_sample", "input must have a batch axis".to_string()));
        }
        let n = shape[0];
        let stride: usize = shape[1..].iter().product();
        let d = self.nodes[a].value.data();
        let out: Vec<f64> = (0..n).map(|i| d[i * stride..(i + 1) * stride].iter().sum()).collect();
        Ok(self.push(Op::SumPerSample(a), Tensor::from_vec(out)))
    }

    pub fn bcast_per_sample(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let n_in = match self.shape(a) {
            [n] => *n,
            s => return Err(TensorError::shape("bcast_per_sample", format!("expected rank-1 input, got {s:?}"))),
        };
        if shape.is_empty() || shape[0] != n_in {
            return Err(TensorError::shape(
                "bcast_per_sample",
                format!("batch axis {n_in} vs target {shape:?}"),
            ));
        }
        let stride: usize = shape[1..].iter().product();
        let src = self.nodes[a].value.data().to_vec();
        let mut out = vec![0.0; n_in * stride];
        for (i, &s) in src.iter().enumerate() {
            out[i * stride..(i + 1) * stride].fill(s);
        }
        Ok(self.push(Op::BcastPerSample(a), Tensor::new(shape.to_vec(), out)?))
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId> {
        let v = self.nodes[a].value.reshape(shape)?;
        Ok(self.push(Op::Reshape(a), v))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, ka) = self.nodes[a].value.dims2()?;
        let (kb, n) = self.nodes[b].value.dims2()?;
        if ka != kb {
            return Err(TensorError::shape("matmul", format!("inner axes {ka} vs {kb}")));
        }
        let v = crate::linalg::matmul(self.nodes[a].value.data(), self.nodes[b].value.data(), m, ka, n);
        Ok(self.push(Op::MatMul(a, b), Tensor::new(vec![m, n], v)?))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let (m, n) = self.nodes[a].value.dims2()?;
        let d = self.nodes[a].value.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = d[i * n + j];
            }
        }
        Ok(self.push(Op::Transpose(a), Tensor::new(vec![n, m], out)?))
    }

    pub fn conv2d(&mut self, x: NodeId, w: NodeId, stride: usize, pad: usize) -> Result<NodeId> {
        let v = conv::conv2d(&self.nodes[x].value, &self.nodes[w].value, stride, pad)?;
        Ok(self.push(Op::Conv2d { x, w, stride, pad }, v))
    }

    pub fn conv2d_transpose(&mut self, x: NodeId, w: NodeId, stride: usize, pad: usize) -> Result<NodeId> {
        let v = conv::conv2d_transpose(&self.nodes[x].value, &self.nodes[w].value, stride, pad, None)?;
        Ok(self.push(Op::ConvT2d { x, w, stride, pad }, v))
    }

    fn conv2d_transpose_sized(&mut self, x: NodeId, w: NodeId, stride: usize, pad: usize, out_hw: (usize, usize)) -> Result<NodeId> {
        let v = conv::conv2d_transpose(&self.nodes[x].value, &self.nodes[w].value, stride, pad, Some(out_hw))?;
        Ok(self.push(Op::ConvT2d { x, w, stride, pad }, v))
    }

    fn conv2d_kernel_grad(&mut self, x: NodeId, g: NodeId, stride: usize, pad: usize, ksize: usize) -> Result<NodeId> {
        let v = conv::conv2d_kernel_grad(&self.nodes[x].value, &self.nodes[g].value, stride, pad, ksize)?;
        Ok(self.push(Op::ConvWGrad { x, g, stride, pad }, v))
    }

    /// Constant tensor of ones shaped like `a` (a convenience for vjps).
    fn ones_like(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::ones(self.nodes[a].value.shape());
        self.constant(v)
    }

    fn mask_of(&mut self, a: NodeId, f: impl Fn(f64) -> f64) -> NodeId {
        let v = self.nodes[a].value.map(f);
        self.constant(v)
    }

    /// Build gradient nodes of a scalar `loss` with respect to `wrt`.
    ///
    /// Returns one entry per requested id; `None` means the loss does not
    /// depend on it (the gradient is identically zero). The returned nodes
    /// live on this tape and can be differentiated again.
    pub fn grad_nodes(&mut self, loss: NodeId, wrt: &[NodeId]) -> Result<Vec<Option<NodeId>>> {
        if !self.nodes[loss].value.is_scalar() {
            return Err(TensorError::shape(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.nodes[loss].value.shape()),
            ));
        }
        // Forward reachability from the wrt set: only propagate adjoints
        // into nodes that can influence a target.
        let mut relevant = vec![false; loss + 1];
        for &w in wrt {
            if w <= loss {
                relevant[w] = true;
            }
        }
        for id in 0..=loss {
            if relevant[id] {
                continue;
            }
            relevant[id] = self.nodes[id].op.inputs().iter().flatten().any(|&i| relevant[i]);
        }

        let mut adj: Vec<Option<NodeId>> = vec![None; loss + 1];
        if relevant[loss] {
            let seed = Tensor::ones(self.nodes[loss].value.shape());
            adj[loss] = Some(self.constant(seed));
        }

        for id in (0..=loss).rev() {
            let Some(g) = adj[id] else { continue };
            let op = self.nodes[id].op.clone();
            let send = |tape: &mut Tape, adj: &mut Vec<Option<NodeId>>, target: NodeId, v: NodeId| -> Result<()> {
                if !tape.nodes[target].needs_grad || !relevant[target] {
                    return Ok(());
                }
                adj[target] = Some(match adj[target] {
                    None => v,
                    Some(prev) => tape.add(prev, v)?,
                });
                Ok(())
            };
            match op {
                Op::Leaf { .. } => {}
                Op::Add(a, b) => {
                    send(self, &mut adj, a, g)?;
                    send(self, &mut adj, b, g)?;
                }
                Op::Sub(a, b) => {
                    send(self, &mut adj, a, g)?;
                    let ng = self.neg(g);
                    send(self, &mut adj, b, ng)?;
                }
                Op::Mul(a, b) => {
                    if self.nodes[a].needs_grad && relevant[a] {
                        let v = self.mul(g, b)?;
                        send(self, &mut adj, a, v)?;
                    }
                    if self.nodes[b].needs_grad && relevant[b] {
                        let v = self.mul(g, a)?;
                        send(self, &mut adj, b, v)?;
                    }
                }
                Op::Div(a, b) => {
                    if self.nodes[a].needs_grad && relevant[a] {
                        let v = self.div(g, b)?;
                        send(self, &mut adj, a, v)?;
                    }
                    if self.nodes[b].needs_grad && relevant[b] {
                        let q = self.div(g, b)?;
                        let qq = self.mul(q, id)?;
                        let v = self.neg(qq);
                        send(self, &mut adj, b, v)?;
                    }
                }
                Op::Neg(a) => {
                    let v = self.neg(g);
                    send(self, &mut adj, a, v)?;
                }
                Op::Scale(a, c) => {
                    let v = self.scale(g, c);
                    send(self, &mut adj, a, v)?;
                }
                Op::AddScalar(a) => send(self, &mut adj, a, g)?,
                Op::Exp(a) => {
                    let v = self.mul(g, id)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Log(a) => {
                    let v = self.div(g, a)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Sqrt(a) => {
                    let h = self.scale(g, 0.5);
                    let v = self.div(h, id)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Square(a) => {
                    let two_a = self.scale(a, 2.0);
                    let v = self.mul(g, two_a)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Tanh(a) => {
                    let one = self.ones_like(id);
                    let y2 = self.square(id);
                    let fac = self.sub(one, y2)?;
                    let v = self.mul(g, fac)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Sigmoid(a) => {
                    let one = self.ones_like(id);
                    let om = self.sub(one, id)?;
                    let fac = self.mul(id, om)?;
                    let v = self.mul(g, fac)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Relu(a) => {
                    let m = self.mask_of(a, |x| if x > 0.0 { 1.0 } else { 0.0 });
                    let v = self.mul(g, m)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::LeakyRelu(a, slope) => {
                    let m = self.mask_of(a, |x| if x > 0.0 { 1.0 } else { slope });
                    let v = self.mul(g, m)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Clamp(a, lo, hi) => {
                    let m = self.mask_of(a, |x| if (lo..=hi).contains(&x) { 1.0 } else { 0.0 });
                    let v = self.mul(g, m)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::SumAll(a) => {
                    let shape = self.nodes[a].value.shape().to_vec();
                    let v = self.fill_like(g, &shape)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::FillLike(a) => {
                    let v = self.sum_all(g);
                    send(self, &mut adj, a, v)?;
                }
                Op::SumChan(a) => {
                    let shape = self.nodes[a].value.shape().to_vec();
                    let v = self.bcast_chan(g, &shape)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::BcastChan(a) => {
                    let v = self.sum_chan(g)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::SumSpatial(a) => {
                    let shape = self.nodes[a].value.shape().to_vec();
                    let v = self.bcast_spatial(g, &shape)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::BcastSpatial(a) => {
                    let v = self.sum_spatial(g)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::SumPerSample(a) => {
                    let shape = self.nodes[a].value.shape().to_vec();
                    let v = self.bcast_per_sample(g, &shape)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::BcastPerSample(a) => {
                    let v = self.sum_per_sample(g)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Reshape(a) => {
                    let shape = self.nodes[a].value.shape().to_vec();
                    let v = self.reshape(g, &shape)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::MatMul(a, b) => {
                    if self.nodes[a].needs_grad && relevant[a] {
                        let bt = self.transpose(b)?;
                        let v = self.matmul(g, bt)?;
                        send(self, &mut adj, a, v)?;
                    }
                    if self.nodes[b].needs_grad && relevant[b] {
                        let at = self.transpose(a)?;
                        let v = self.matmul(at, g)?;
                        send(self, &mut adj, b, v)?;
                    }
                }
                Op::Transpose(a) => {
                    let v = self.transpose(g)?;
                    send(self, &mut adj, a, v)?;
                }
                Op::Conv2d { x, w, stride, pad } => {
                    if self.nodes[x].needs_grad && relevant[x] {
                        let sh = self.nodes[x].value.shape();
                        let out_hw = (sh[2], sh[3]);
                        let v = self.conv2d_transpose_sized(g, w, stride, pad, out_hw)?;
                        send(self, &mut adj, x, v)?;
                    }
                    if self.nodes[w].needs_grad && relevant[w] {
                        let k = self.nodes[w].value.shape()[2];
                        let v = self.conv2d_kernel_grad(x, g, stride, pad, k)?;
                        send(self, &mut adj, w, v)?;
                    }
                }
                Op::ConvT2d { x, w, stride, pad } => {
                    if self.nodes[x].needs_grad && relevant[x] {
                        let v = self.conv2d(g, w, stride, pad)?;
                        send(self, &mut adj, x, v)?;
                    }
                    if self.nodes[w].needs_grad && relevant[w] {
                        let k = self.nodes[w].value.shape()[2];
                        let v = self.conv2d_kernel_grad(g, x, stride, pad, k)?;
                        send(self, &mut adj, w, v)?;
                    }
                }
                Op::ConvWGrad { x, g: gx, stride, pad } => {
                    // Bilinear in (x, g): d/dx = convT(g, upstream), d/dg = conv(x, upstream).
                    if self.nodes[x].needs_grad && relevant[x] {
                        let sh = self.nodes[x].value.shape();
                        let out_hw = (sh[2], sh[3]);
                        let v = self.conv2d_transpose_sized(gx, g, stride, pad, out_hw)?;
                        send(self, &mut adj, x, v)?;
                    }
                    if self.nodes[gx].needs_grad && relevant[gx] {
                        let v = self.conv2d(x, g, stride, pad)?;
                        send(self, &mut adj, gx, v)?;
                    }
                }
            }
        }

        Ok(wrt
            .iter()
            .map(|&w| if w <= loss { adj[w] } else { None })
            .collect())
    }

    /// Gradients of a scalar `loss` for every `requires_grad` leaf.
    /// Leaves the loss does not reach get zero gradients.
    pub fn backward(&mut self, loss: NodeId) -> Result<Gradients> {
        let leaves = self.grad_leaves.clone();
        let nodes = self.grad_nodes(loss, &leaves)?;
        let mut grads = BTreeMap::new();
        for (leaf, node) in leaves.into_iter().zip(nodes) {
            let t = match node {
                Some(id) => self.nodes[id].value.clone(),
                None => Tensor::zeros(self.nodes[leaf].value.shape()),
            };
            t.validate_finite(&format!("gradient of leaf node {leaf}"))?;
            grads.insert(leaf, t);
        }
        Ok(Gradients { grads })
    }
}
