//! Define-by-run reverse-mode differentiation over dense `f64` tensors.
//!
//! A [`Graph`] records every operation applied during one forward pass.
//! [`Graph::backward`] walks the record in reverse and returns exact
//! gradients for every node created with `requires_grad`. The graph is
//! thrown away after use; the next forward pass builds a new one.
//!
//! Tensors are row-major. Most operations work on matrices; a 1-D tensor
//! of length `n` is treated as a `1 x n` row where that matters.
//!
//! ```
//! use hatespeech::autodiff::{Graph, Mode, Tensor};
//!
//! let mut g = Graph::new(Mode::Eval, 0);
//! let x = g.leaf(Tensor::scalar(3.0).requiring_grad());
//! let y = g.mul(x, x).unwrap();
//! let grads = g.backward(y).unwrap();
//! assert_eq!(grads.get(x).data, vec![6.0]);
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Argument(format!("invalid tensor shape {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Shape {
                op: "tensor",
                lhs: shape,
                rhs: vec![data.len()],
            });
        }
        Ok(Self {
            shape,
            data,
            requires_grad: false,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n]).expect("zeros shape")
    }

    pub fn scalar(v: f64) -> Self {
        Self::new(vec![1], vec![v]).expect("scalar shape")
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn row(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::new(vec![1, n], data).expect("row shape")
    }

    pub fn requiring_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// Row count when read as a matrix.
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            1 => 1,
            _ => self.shape[..self.shape.len() - 1].iter().product(),
        }
    }

    pub fn cols(&self) -> usize {
        *self.shape.last().expect("non-empty shape")
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }
}

/// Train mode samples dropout masks; eval mode makes dropout the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat {
        inputs: Vec<Var>,
        axis: usize,
    },
    SliceCols {
        input: Var,
        start: usize,
    },
    SliceRows {
        input: Var,
        start: usize,
    },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Dropout {
        input: Var,
        mask: Vec<f64>,
    },
    Embedding {
        table: Var,
        ids: Vec<usize>,
    },
    Windows {
        input: Var,
        starts: Vec<usize>,
        width: usize,
    },
    SegmentMax {
        input: Var,
        argmax: Vec<usize>,
    },
    SelectRows {
        on: Var,
        off: Var,
        mask: Vec<bool>,
    },
    Sum(Var),
    Pick {
        input: Var,
        index: usize,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Operation record for a single forward/backward pass.
#[derive(Debug)]
pub struct Graph {
    nodes: Vec<Node>,
    mode: Mode,
    rng: ChaCha8Rng,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Shape {
        op,
        lhs: a.shape.clone(),
        rhs: b.shape.clone(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    /// `seed` drives dropout masks; eval-mode results never depend on it.
    pub fn new(mode: Mode, seed: u64) -> Self {
        Self {
            nodes: Vec::new(),
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Adds an input tensor; it is differentiated iff `t.requires_grad`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let rg = t.requires_grad;
        self.push(t, Op::Leaf, rg)
    }

    /// Adds a differentiable copy of a parameter.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.leaf(t.clone().requiring_grad())
    }

    pub fn constant(&mut self, mut t: Tensor) -> Var {
        t.requires_grad = false;
        self.leaf(t)
    }

    /// `[m, k] x [k, n] -> [m, n]`
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape.len() != 2 || tb.shape.len() != 2 || ta.shape[1] != tb.shape[0] {
            return Err(shape_err("matmul", ta, tb));
        }
        let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let av = ta.data[i * k + p];
                let brow = &tb.data[p * n..(p + 1) * n];
                for (o, &bv) in row.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::matrix(m, n, out)?, Op::MatMul(a, b), rg))
    }

    /// Elementwise sum of equally shaped tensors.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape != tb.shape {
            return Err(shape_err("add", ta, tb));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
        let shape = ta.shape.clone();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, data)?, Op::Add(a, b), rg))
    }

    /// Adds a length-`n` bias to every row of an `[m, n]` matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let n = ta.cols();
        if tb.numel() != n || tb.rows() != 1 {
            return Err(shape_err("add_bias", ta, tb));
        }
        let data = ta.data.iter().enumerate().map(|(i, x)| x + tb.data[i % n]).collect();
        let shape = ta.shape.clone();
        let rg = self.rg(&[a, bias]);
        Ok(self.push(Tensor::new(shape, data)?, Op::AddBias(a, bias), rg))
    }

    /// Elementwise product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape != tb.shape {
            return Err(shape_err("mul", ta, tb));
        }
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let shape = ta.shape.clone();
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new(shape, data)?, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let ta = self.value(a);
        let t = Tensor {
            shape: ta.shape.clone(),
            data: ta.data.iter().map(|x| x * factor).collect(),
            requires_grad: false,
        };
        let rg = self.rg(&[a]);
        self.push(t, Op::Scale(a, factor), rg)
    }

    /// Concatenates matrices along rows (`axis = 0`) or columns (`axis = 1`).
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| Error::Argument("concat of zero tensors".into()))?;
        if axis > 1 {
            return Err(Error::Argument(format!("concat axis {axis} on matrices")));
        }
        let t0 = self.value(first);
        let (r0, c0) = (t0.rows(), t0.cols());
        for &v in &inputs[1..] {
            let t = self.value(v);
            let ok = if axis == 0 { t.cols() == c0 } else { t.rows() == r0 };
            if !ok {
                return Err(shape_err("concat", t0, t));
            }
        }
        let out = if axis == 0 {
            let rows: usize = inputs.iter().map(|&v| self.value(v).rows()).sum();
            let mut data = Vec::with_capacity(rows * c0);
            for &v in inputs {
                data.extend_from_slice(&self.value(v).data);
            }
            Tensor::matrix(rows, c0, data)?
        } else {
            let cols: usize = inputs.iter().map(|&v| self.value(v).cols()).sum();
            let mut data = Vec::with_capacity(r0 * cols);
            for r in 0..r0 {
                for &v in inputs {
                    let t = self.value(v);
                    let c = t.cols();
                    data.extend_from_slice(&t.data[r * c..(r + 1) * c]);
                }
            }
            Tensor::matrix(r0, cols, data)?
        };
        let rg = self.rg(inputs);
        Ok(self.push(
            out,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            rg,
        ))
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let t = self.value(a);
        let (r, c) = (t.rows(), t.cols());
        if start >= end || end > c {
            return Err(Error::Argument(format!(
                "column slice {start}..{end} of shape {:?}",
                t.shape
            )));
        }
        let w = end - start;
        let mut data = Vec::with_capacity(r * w);
        for i in 0..r {
            data.extend_from_slice(&t.data[i * c + start..i * c + end]);
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::matrix(r, w, data)?, Op::SliceCols { input: a, start }, rg))
    }

    /// Rows `start..end` of a matrix.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let t = self.value(a);
        let (r, c) = (t.rows(), t.cols());
        if start >= end || end > r {
            return Err(Error::Argument(format!(
                "row slice {start}..{end} of shape {:?}",
                t.shape
            )));
        }
        let data = t.data[start * c..end * c].to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(
            Tensor::matrix(end - start, c, data)?,
            Op::SliceRows { input: a, start },
            rg,
        ))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(a);
        let out = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().map(|&x| f(x)).collect(),
            requires_grad: false,
        };
        let rg = self.rg(&[a]);
        self.push(out, op, rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    /// Inverted dropout. Identity in eval mode or when `keep_prob == 1`.
    pub fn dropout(&mut self, a: Var, keep_prob: f64) -> Result<Var> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::Argument(format!(
                "dropout keep probability {keep_prob} outside (0, 1]"
            )));
        }
        if self.mode == Mode::Eval || keep_prob == 1.0 {
            return Ok(a);
        }
        let n = self.value(a).numel();
        let scale = 1.0 / keep_prob;
        let mask: Vec<f64> = (0..n)
            .map(|_| if self.rng.gen::<f64>() < keep_prob { scale } else { 0.0 })
            .collect();
        let t = self.value(a);
        let out = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().zip(&mask).map(|(x, m)| x * m).collect(),
            requires_grad: false,
        };
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::Dropout { input: a, mask }, rg))
    }

    /// Gathers rows of a `[vocab, dim]` table: `[ids.len(), dim]`.
    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        if t.shape.len() != 2 {
            return Err(Error::Argument(format!("embedding table shape {:?}", t.shape)));
        }
        if ids.is_empty() {
            return Err(Error::Argument("embedding lookup of zero ids".into()));
        }
        let (v, d) = (t.shape[0], t.shape[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(Error::Encoding { id, vocab_size: v });
            }
            data.extend_from_slice(&t.data[id * d..(id + 1) * d]);
        }
        let rg = self.rg(&[table]);
        Ok(self.push(
            Tensor::matrix(ids.len(), d, data)?,
            Op::Embedding {
                table,
                ids: ids.to_vec(),
            },
            rg,
        ))
    }

    /// Sliding windows over rows: output row `r` is rows
    /// `starts[r]..starts[r] + width` of `a` laid end to end.
    pub fn windows(&mut self, a: Var, starts: &[usize], width: usize) -> Result<Var> {
        let t = self.value(a);
        let (r, c) = (t.rows(), t.cols());
        if width == 0 || starts.is_empty() || starts.iter().any(|&s| s + width > r) {
            return Err(Error::Argument(format!("windows of width {width} do not fit {r} rows")));
        }
        let mut data = Vec::with_capacity(starts.len() * width * c);
        for &s in starts {
            data.extend_from_slice(&t.data[s * c..(s + width) * c]);
        }
        let rg = self.rg(&[a]);
        Ok(self.push(
            Tensor::matrix(starts.len(), width * c, data)?,
            Op::Windows {
                input: a,
                starts: starts.to_vec(),
                width,
            },
            rg,
        ))
    }

    /// Column-wise max over consecutive row segments of the given lengths:
    /// `[sum(lengths), c] -> [lengths.len(), c]`. Ties go to the earliest row.
    pub fn max_over_time(&mut self, a: Var, lengths: &[usize]) -> Result<Var> {
        let t = self.value(a);
        let (r, c) = (t.rows(), t.cols());
        if lengths.is_empty() || lengths.contains(&0) || lengths.iter().sum::<usize>() != r {
            return Err(Error::Argument(format!(
                "segments {lengths:?} do not partition {r} rows"
            )));
        }
        let mut data = Vec::with_capacity(lengths.len() * c);
        let mut argmax = Vec::with_capacity(lengths.len() * c);
        let mut start = 0;
        for &len in lengths {
            for j in 0..c {
                let mut best = start;
                for i in start + 1..start + len {
                    if t.data[i * c + j] > t.data[best * c + j] {
                        best = i;
                    }
                }
                data.push(t.data[best * c + j]);
                argmax.push(best);
            }
            start += len;
        }
        let rg = self.rg(&[a]);
        Ok(self.push(
            Tensor::matrix(lengths.len(), c, data)?,
            Op::SegmentMax { input: a, argmax },
            rg,
        ))
    }

    /// Row-wise choice: row `r` comes from `on` where `mask[r]`, else `off`.
    pub fn select_rows(&mut self, on: Var, off: Var, mask: &[bool]) -> Result<Var> {
        let (ta, tb) = (self.value(on), self.value(off));
        if ta.shape != tb.shape || ta.rows() != mask.len() {
            return Err(shape_err("select_rows", ta, tb));
        }
        let c = ta.cols();
        let mut data = Vec::with_capacity(ta.numel());
        for (r, &m) in mask.iter().enumerate() {
            let src = if m { ta } else { tb };
            data.extend_from_slice(&src.data[r * c..(r + 1) * c]);
        }
        let shape = ta.shape.clone();
        let rg = self.rg(&[on, off]);
        Ok(self.push(
            Tensor::new(shape, data)?,
            Op::SelectRows {
                on,
                off,
                mask: mask.to_vec(),
            },
            rg,
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    /// The scalar at flat position `index`.
    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let t = self.value(a);
        let v = *t
            .data
            .get(index)
            .ok_or_else(|| Error::Argument(format!("index {index} outside tensor of shape {:?}", t.shape)))?;
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::scalar(v), Op::Pick { input: a, index }, rg))
    }

    /// Mean softmax cross-entropy of `[batch, classes]` logits.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let t = self.value(logits);
        let (b, c) = (t.rows(), t.cols());
        if labels.len() != b {
            return Err(Error::Shape {
                op: "softmax_cross_entropy",
                lhs: t.shape.clone(),
                rhs: vec![labels.len()],
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Argument(format!("label {bad} outside {c} classes")));
        }
        let mut probs = Vec::with_capacity(b * c);
        let mut loss = 0.0;
        for (r, &label) in labels.iter().enumerate() {
            let row = &t.data[r * c..(r + 1) * c];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let log_z = max + z.ln();
            loss += log_z - row[label];
            probs.extend(row.iter().map(|x| (x - log_z).exp()));
        }
        let rg = self.rg(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss / b as f64),
            Op::SoftmaxCrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            rg,
        ))
    }

    /// Reverse pass from a scalar. Gradients exist for every node created
    /// with `requires_grad`; the rest read as zero.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.numel() != 1 {
            return Err(Error::Argument(format!(
                "backward needs a scalar, got shape {:?}",
                lt.shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients::new(self, grads));
        }
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients::new(self, grads))
    }

    fn acc<'a>(&self, grads: &'a mut [Option<Vec<f64>>], v: Var) -> Option<&'a mut Vec<f64>> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; node.value.numel()]))
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape[0], ta.shape[1], tb.shape[1]);
                if let Some(ga) = self.acc(grads, *a) {
                    // dA = dC B^T
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &tb.data[p * n..(p + 1) * n];
                            ga[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                }
                if let Some(gb) = self.acc(grads, *b) {
                    // dB = A^T dC
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let av = ta.data[i * k + p];
                            let dst = &mut gb[p * n..(p + 1) * n];
                            for (d, &x) in dst.iter_mut().zip(grow) {
                                *d += av * x;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if let Some(ga) = self.acc(grads, v) {
                        ga.iter_mut().zip(g).for_each(|(d, x)| *d += x);
                    }
                }
            }
            Op::AddBias(a, bias) => {
                if let Some(ga) = self.acc(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, x)| *d += x);
                }
                let n = out.cols();
                if let Some(gb) = self.acc(grads, *bias) {
                    for (i, x) in g.iter().enumerate() {
                        gb[i % n] += x;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                if let Some(ga) = self.acc(grads, *a) {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(&tb.data) {
                        *d += x * y;
                    }
                }
                if let Some(gb) = self.acc(grads, *b) {
                    for ((d, x), y) in gb.iter_mut().zip(g).zip(&ta.data) {
                        *d += x * y;
                    }
                }
            }
            Op::Scale(a, f) => {
                if let Some(ga) = self.acc(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(d, x)| *d += x * f);
                }
            }
            Op::Concat { inputs, axis } => {
                let total_cols = out.cols();
                let mut offset = 0;
                for &v in inputs {
                    let t = self.value(v);
                    let (r, c) = (t.rows(), t.cols());
                    if let Some(gv) = self.acc(grads, v) {
                        if *axis == 0 {
                            gv.iter_mut()
                                .zip(&g[offset * c..(offset + r) * c])
                                .for_each(|(d, x)| *d += x);
                        } else {
                            for i in 0..r {
                                let src = &g[i * total_cols + offset..i * total_cols + offset + c];
                                gv[i * c..(i + 1) * c].iter_mut().zip(src).for_each(|(d, x)| *d += x);
                            }
                        }
                    }
                    offset += if *axis == 0 { r } else { c };
                }
            }
            Op::SliceCols { input, start } => {
                let c_in = self.value(*input).cols();
                let w = out.cols();
                if let Some(gi) = self.acc(grads, *input) {
                    for i in 0..out.rows() {
                        gi[i * c_in + start..i * c_in + start + w]
                            .iter_mut()
                            .zip(&g[i * w..(i + 1) * w])
                            .for_each(|(d, x)| *d += x);
                    }
                }
            }
            Op::SliceRows { input, start } => {
                let c = out.cols();
                if let Some(gi) = self.acc(grads, *input) {
                    gi[start * c..start * c + g.len()]
                        .iter_mut()
                        .zip(g)
                        .for_each(|(d, x)| *d += x);
                }
            }
            Op::Sigmoid(a) => {
                if let Some(ga) = self.acc(grads, *a) {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(&out.data) {
                        *d += x * y * (1.0 - y);
                    }
                }
            }
            Op::Tanh(a) => {
                if let Some(ga) = self.acc(grads, *a) {
                    for ((d, x), y) in ga.iter_mut().zip(g).zip(&out.data) {
                        *d += x * (1.0 - y * y);
                    }
                }
            }
            Op::Relu(a) => {
                let ta = self.value(*a);
                if let Some(ga) = self.acc(grads, *a) {
                    for ((d, x), xin) in ga.iter_mut().zip(g).zip(&ta.data) {
                        if *xin > 0.0 {
                            *d += x;
                        }
                    }
                }
            }
            Op::Dropout { input, mask } => {
                if let Some(gi) = self.acc(grads, *input) {
                    for ((d, x), m) in gi.iter_mut().zip(g).zip(mask) {
                        *d += x * m;
                    }
                }
            }
            Op::Embedding { table, ids } => {
                let d = out.cols();
                if let Some(gt) = self.acc(grads, *table) {
                    for (r, &id) in ids.iter().enumerate() {
                        gt[id * d..(id + 1) * d]
                            .iter_mut()
                            .zip(&g[r * d..(r + 1) * d])
                            .for_each(|(dst, x)| *dst += x);
                    }
                }
            }
            Op::Windows { input, starts, width } => {
                let c = self.value(*input).cols();
                let row_w = width * c;
                if let Some(gi) = self.acc(grads, *input) {
                    for (r, &s) in starts.iter().enumerate() {
                        gi[s * c..s * c + row_w]
                            .iter_mut()
                            .zip(&g[r * row_w..(r + 1) * row_w])
                            .for_each(|(d, x)| *d += x);
                    }
                }
            }
            Op::SegmentMax { input, argmax } => {
                let c = out.cols();
                if let Some(gi) = self.acc(grads, *input) {
                    for (k, (&row, x)) in argmax.iter().zip(g).enumerate() {
                        gi[row * c + k % c] += x;
                    }
                }
            }
            Op::SelectRows { on, off, mask } => {
                let c = out.cols();
                for (v, want) in [(*on, true), (*off, false)] {
                    if let Some(gv) = self.acc(grads, v) {
                        for (r, &m) in mask.iter().enumerate() {
                            if m == want {
                                gv[r * c..(r + 1) * c]
                                    .iter_mut()
                                    .zip(&g[r * c..(r + 1) * c])
                                    .for_each(|(d, x)| *d += x);
                            }
                        }
                    }
                }
            }
            Op::Sum(a) => {
                if let Some(ga) = self.acc(grads, *a) {
                    ga.iter_mut().for_each(|d| *d += g[0]);
                }
            }
            Op::Pick { input, index } => {
                if let Some(gi) = self.acc(grads, *input) {
                    gi[*index] += g[0];
                }
            }
            Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                let c = self.value(*logits).cols();
                let scale = g[0] / labels.len() as f64;
                if let Some(gl) = self.acc(grads, *logits) {
                    for (r, &label) in labels.iter().enumerate() {
                        for j in 0..c {
                            let target = if j == label { 1.0 } else { 0.0 };
                            gl[r * c + j] += scale * (probs[r * c + j] - target);
                        }
                    }
                }
            }
        }
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    fn new(graph: &Graph, grads: Vec<Option<Vec<f64>>>) -> Self {
        Self {
            grads,
            shapes: graph.nodes.iter().map(|n| n.value.shape.clone()).collect(),
        }
    }

    /// Gradient of the loss with respect to `v`; zeros if `v` was unreachable.
    pub fn get(&self, v: Var) -> Tensor {
        let shape = self.shapes[v.0].clone();
        match &self.grads[v.0] {
            Some(g) => Tensor::new(shape, g.clone()).expect("gradient shape"),
            None => Tensor::zeros(shape),
        }
    }

    pub fn data(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    /// Moves the gradient out without copying.
    pub fn take(&mut self, v: Var) -> Vec<f64> {
        let n = self.shapes[v.0].iter().product();
        self.grads[v.0].take().unwrap_or_else(|| vec![0.0; n])
    }
}

/// Settings for [`grad_check_with`].
#[derive(Debug, Clone)]
pub struct GradCheck {
    pub eps: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Probe at most this many coordinates (chosen at random); `None` checks all.
    pub max_coords: Option<usize>,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            mode: Mode::Eval,
            seed: 0,
            max_coords: None,
        }
    }
}

/// Max relative error between analytic and central-difference gradients
/// of a scalar function of one tensor, measured as
/// `|analytic - numeric| / max(1, |analytic|)`.
pub fn grad_check<F>(f: F, point: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    grad_check_with(
        |g, vars| f(g, vars[0]),
        std::slice::from_ref(point),
        &GradCheck {
            eps,
            ..GradCheck::default()
        },
    )
}

/// Multi-input form of [`grad_check`]. Every evaluation uses a fresh graph
/// with the same mode and seed, so train-mode dropout masks repeat.
pub fn grad_check_with<F>(f: F, points: &[Tensor], opts: &GradCheck) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    if !(opts.eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {}", opts.eps)));
    }
    let eval = |pts: &[Tensor]| -> Result<(f64, Graph, Vec<Var>)> {
        let mut g = Graph::new(opts.mode, opts.seed);
        let vars: Vec<Var> = pts.iter().map(|p| g.param(p)).collect();
        let out = f(&mut g, &vars)?;
        let v = g.value(out);
        if v.numel() != 1 {
            return Err(Error::Argument(format!("grad_check needs a scalar, got {:?}", v.shape)));
        }
        let y = v.item();
        if !y.is_finite() {
            return Err(Error::Numeric(format!("function value {y}")));
        }
        Ok((y, g, vars))
    };

    let (_, graph, vars) = eval(points)?;
    let out = Var(graph.len() - 1);
    let grads = graph.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.get(v)).collect();

    let mut coords: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(t, p)| (0..p.numel()).map(move |i| (t, i)))
        .collect();
    if let Some(max) = opts.max_coords {
        if coords.len() > max {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
            coords.shuffle(&mut rng);
            coords.truncate(max);
        }
    }

    let mut worst = 0.0f64;
    let mut work = points.to_vec();
    for (t, i) in coords {
        let orig = work[t].data[i];
        work[t].data[i] = orig + opts.eps;
        let (hi, ..) = eval(&work)?;
        work[t].data[i] = orig - opts.eps;
        let (lo, ..) = eval(&work)?;
        work[t].data[i] = orig;

        let numeric = (hi - lo) / (2.0 * opts.eps);
        let a = analytic[t].data[i];
        if !a.is_finite() || !numeric.is_finite() {
            return Err(Error::Numeric(format!("gradient at coordinate {i}: {a} vs {numeric}")));
        }
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn relu_forward() {
        let mut g = Graph::new(Mode::Eval, 0);
        let x = g.leaf(Tensor::row(vec![-1.0, 0.0, 2.0]));
        let y = g.relu(x);
        assert_eq!(g.value(y).data, vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let mut g = Graph::new(Mode::Eval, 0);
        let x = g.leaf(Tensor::row(vec![0.0, 0.0]));
        let l = g.softmax_cross_entropy(x, &[0]).unwrap();
        assert!(close(g.value(l).item(), std::f64::consts::LN_2, 1e-15));
        assert!(matches!(g.softmax_cross_entropy(x, &[2]), Err(Error::Argument(_))));
    }

    #[test]
    fn max_over_time_routes_to_argmax() {
        let mut g = Graph::new(Mode::Eval, 0);
        let x = g.leaf(Tensor::matrix(3, 1, vec![1.0, 3.0, 2.0]).unwrap().requiring_grad());
        let m = g.max_over_time(x, &[3]).unwrap();
        assert_eq!(g.value(m).data, vec![3.0]);
        let s = g.sum(m);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).data, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn square_and_sigmoid_derivatives() {
        let mut g = Graph::new(Mode::Eval, 0);
        let x = g.leaf(Tensor::scalar(3.0).requiring_grad());
        let y = g.mul(x, x).unwrap();
        assert_eq!(g.backward(y).unwrap().get(x).data, vec![6.0]);

        let mut g = Graph::new(Mode::Eval, 0);
        let x = g.leaf(Tensor::scalar(0.0).requiring_grad());
        let y = g.sigmoid(x);
        assert_eq!(g.backward(y).unwrap().get(x).data, vec![0.25]);
    }

    #[test]
    fn tanh_of_product() {
        let mut g = Graph::new(Mode::Eval, 0);
        let w = g.leaf(Tensor::scalar(0.5).requiring_grad());
        let x = g.constant(Tensor::scalar(1.0));
        let wx = g.mul(w, x).unwrap();
        let y = g.tanh(wx);
        let dw = g.backward(y).unwrap().get(w).item();
        let closed = 1.0 * (1.0 - 0.5f64.tanh().powi(2));
        assert!(close(dw, closed, 1e-15));
        assert!(close(dw, 0.786448, 1e-6));
        let fd = ((0.5f64 + 1e-6).tanh() - (0.5f64 - 1e-6).tanh()) / 2e-6;
        assert!(close(dw, fd, 1e-9));
    }

    #[test]
    fn unreachable_params_get_zero() {
        let mut g = Graph::new(Mode::Eval, 0);
        let a = g.leaf(Tensor::row(vec![1.0, 2.0]).requiring_grad());
        let b = g.leaf(Tensor::row(vec![3.0]).requiring_grad());
        let s = g.sum(a);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(b).data, vec![0.0]);
        assert!(grads.data(b).is_none());
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new(Mode::Eval, 0);
        let a = g.leaf(Tensor::row(vec![1.0, 2.0]).requiring_grad());
        assert!(matches!(g.backward(a), Err(Error::Argument(_))));
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let mut g = Graph::new(Mode::Eval, 0);
        let a = g.leaf(Tensor::zeros(vec![2, 3]));
        let b = g.leaf(Tensor::zeros(vec![2, 3]));
        match g.matmul(a, b) {
            Err(Error::Shape { lhs, rhs, .. }) => {
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![2, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let c = g.leaf(Tensor::zeros(vec![3, 2]));
        assert!(g.add(a, c).is_err());
        assert!(g.mul(a, c).is_err());
    }

    #[test]
    fn dropout_eval_is_identity_and_train_is_seeded() {
        let x = Tensor::row((0..50).map(|i| i as f64).collect());
        let mut g = Graph::new(Mode::Eval, 1);
        let v = g.leaf(x.clone());
        let d = g.dropout(v, 0.5).unwrap();
        assert_eq!(d, v);

        let run = |seed| {
            let mut g = Graph::new(Mode::Train, seed);
            let v = g.leaf(x.clone());
            let d = g.dropout(v, 0.5).unwrap();
            g.value(d).data.clone()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
        assert!(run(3).iter().zip(&x.data).all(|(y, x)| *y == 0.0 || *y == 2.0 * x));
    }

    #[test]
    fn linear_grad_check_is_exact() {
        let p = Tensor::row(vec![0.3, -1.2, 4.0]);
        let err = grad_check(
            |g, x| {
                let s = g.sum(x);
                Ok(g.scale(s, 3.0))
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn grad_check_flags_non_finite() {
        let p = Tensor::row(vec![1e308]);
        let r = grad_check(
            |g, x| {
                let y = g.mul(x, x)?;
                Ok(g.sum(y))
            },
            &p,
            1e-5,
        );
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}
