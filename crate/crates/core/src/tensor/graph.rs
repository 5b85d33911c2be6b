use rand::Rng;

use super::kernels::{gemm, Layout};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Per-feature batch statistics measured by a training-mode batch-norm.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Unbiased variance (n−1 denominator).
    pub var: Vec<f64>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRowBias(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Relu(Var),
    Reshape(Var),
    SoftmaxRows(Var),
    BatchMatMul {
        a: Var,
        b: Var,
        groups: usize,
    },
    FoldRows {
        a: Var,
        groups: usize,
    },
    L1NormalizeRows {
        a: Var,
        eps: f64,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        batch_coupled: bool,
    },
    Dropout {
        a: Var,
        mask: Vec<f64>,
    },
    SadRows(Var, Var),
    LHalfRows(Var),
    GatherRows {
        a: Var,
        rows: Vec<usize>,
    },
    Sum(Var),
    Mean(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// A tape of tensor operations, recorded in insertion order.
///
/// Nodes can only reference earlier nodes, so the tape is acyclic and
/// reverse insertion order is a valid backward schedule.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node that requires one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn check_same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    Ok(())
}

fn matrix_dims(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    if t.ndim() != 2 {
        return Err(Error::Shape {
            op,
            left: t.shape().to_vec(),
            right: vec![],
        });
    }
    Ok((t.shape()[0], t.shape()[1]))
}

/// Shape of a per-row reduction: vectors reduce to a scalar.
fn row_reduced_shape(t: &Tensor) -> Vec<usize> {
    if t.ndim() <= 1 {
        Vec::new()
    } else {
        t.shape()[..t.ndim() - 1].to_vec()
    }
}

pub(crate) fn softmax_rows_in_place(t: &mut Tensor) {
    let c = t.cols();
    if c == 0 {
        return;
    }
    for row in t.data_mut().chunks_mut(c) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
}

pub(crate) struct SadTerms {
    pub angle: f64,
    dot: f64,
    norm_a: f64,
    norm_b: f64,
    cos: f64,
}

pub(crate) fn sad_terms(a: &[f64], b: &[f64]) -> Result<SadTerms> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::Domain {
            op: "sad",
            reason: "spectral angle of a zero vector".into(),
        });
    }
    let cos = (dot / (norm_a * norm_b)).clamp(-1.0, 1.0);
    // acos loses half the digits near 0 and π; the half-angle form does not.
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / norm_a, y / norm_b);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    Ok(SadTerms {
        angle: 2.0 * diff.sqrt().atan2(sum.sqrt()),
        dot,
        norm_a,
        norm_b,
        cos,
    })
}

pub(crate) fn l_half_row(v: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &x in v {
        if x < 0.0 {
            return Err(Error::Domain {
                op: "l_half_penalty",
                reason: format!("negative entry {x}"),
            });
        }
        total += x.sqrt();
    }
    Ok(total)
}

/// Floor on 1−cos² in the arccos derivative; keeps collinear pairs finite.
const ACOS_GRAD_FLOOR: f64 = 1e-12;

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    /// `a·b` for matrices `m×k` and `k×n`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = matrix_dims("matmul", ta)?;
        let (k2, n) = matrix_dims("matmul", tb)?;
        if k != k2 {
            return Err(Error::Shape {
                op: "matmul",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, ta.data(), Layout::Normal, tb.data(), Layout::Normal, &mut out, false);
        self.push("matmul", Tensor::matrix(m, n, out)?, Op::MatMul(a, b), &[a, b])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let t = self.value(a).transposed()?;
        self.push("transpose", t, Op::Transpose(a), &[a])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        check_same_shape("add", ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("add", t, Op::Add(a, b), &[a, b])
    }

    /// Adds `bias[c]` to every row of `a`.
    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let c = ta.cols();
        if tb.numel() != c || tb.ndim() != 1 {
            return Err(Error::Shape {
                op: "add_row_bias",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let mut data = ta.data().to_vec();
        for row in data.chunks_mut(c) {
            for (v, b) in row.iter_mut().zip(tb.data()) {
                *v += b;
            }
        }
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("add_row_bias", t, Op::AddRowBias(a, bias), &[a, bias])
    }

    /// Elementwise (Hadamard) product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        check_same_shape("mul", ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("mul", t, Op::Mul(a, b), &[a, b])
    }

    /// Multiplies column `c` of every row of `a` by `w[c]`.
    pub fn mul_row(&mut self, a: Var, w: Var) -> Result<Var> {
        let (ta, tw) = (self.value(a), self.value(w));
        let c = ta.cols();
        if tw.numel() != c || tw.ndim() != 1 {
            return Err(Error::Shape {
                op: "mul_row",
                left: ta.shape().to_vec(),
                right: tw.shape().to_vec(),
            });
        }
        let mut data = ta.data().to_vec();
        for row in data.chunks_mut(c) {
            for (v, s) in row.iter_mut().zip(tw.data()) {
                *v *= s;
            }
        }
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("mul_row", t, Op::MulRow(a, w), &[a, w])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * factor).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("scale", t, Op::Scale(a, factor), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| sigmoid(x)).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("sigmoid", t, Op::Sigmoid(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let data = ta.data().iter().map(|&x| x.max(0.0)).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("relu", t, Op::Relu(a), &[a])
    }

    /// Row-major reshape; the element count must not change.
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a).clone().reshaped(shape)?;
        self.push("reshape", t, Op::Reshape(a), &[a])
    }

    /// Softmax across the last axis, shifted by the row maximum.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let mut t = self.value(a).clone();
        softmax_rows_in_place(&mut t);
        self.push("softmax_rows", t, Op::SoftmaxRows(a), &[a])
    }

    /// Group-wise product: `a` is `[g, m, k]`, `b` is `[g, k, n]`, result `[g, m, n]`.
    pub fn batch_matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let shape_err = || Error::Shape {
            op: "batch_matmul",
            left: ta.shape().to_vec(),
            right: tb.shape().to_vec(),
        };
        if ta.ndim() != 3 || tb.ndim() != 3 {
            return Err(shape_err());
        }
        let (g, m, k) = (ta.shape()[0], ta.shape()[1], ta.shape()[2]);
        let (g2, k2, n) = (tb.shape()[0], tb.shape()[1], tb.shape()[2]);
        if g != g2 || k != k2 {
            return Err(shape_err());
        }
        let mut out = vec![0.0; g * m * n];
        for i in 0..g {
            gemm(
                m,
                k,
                n,
                &ta.data()[i * m * k..(i + 1) * m * k],
                Layout::Normal,
                &tb.data()[i * k * n..(i + 1) * k * n],
                Layout::Normal,
                &mut out[i * m * n..(i + 1) * m * n],
                false,
            );
        }
        let t = Tensor::new(vec![g, m, n], out)?;
        self.push("batch_matmul", t, Op::BatchMatMul { a, b, groups: g }, &[a, b])
    }

    /// Sums the rows within each group: `[g, r, c]` becomes `[g, c]`.
    pub fn fold_rows(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        if ta.ndim() != 3 {
            return Err(Error::Shape {
                op: "fold_rows",
                left: ta.shape().to_vec(),
                right: vec![],
            });
        }
        let (g, r, c) = (ta.shape()[0], ta.shape()[1], ta.shape()[2]);
        let mut out = vec![0.0; g * c];
        for (group, dst) in ta.data().chunks(r * c).zip(out.chunks_mut(c)) {
            for row in group.chunks(c) {
                for (d, v) in dst.iter_mut().zip(row) {
                    *d += v;
                }
            }
        }
        let t = Tensor::new(vec![g, c], out)?;
        self.push("fold_rows", t, Op::FoldRows { a, groups: g }, &[a])
    }

    /// Divides each row by its l1 norm plus `eps`.
    pub fn l1_normalize_rows(&mut self, a: Var, eps: f64) -> Result<Var> {
        let mut t = self.value(a).clone();
        let c = t.cols();
        for row in t.data_mut().chunks_mut(c.max(1)) {
            let denom = row.iter().map(|x| x.abs()).sum::<f64>() + eps;
            if denom == 0.0 {
                continue;
            }
            for v in row.iter_mut() {
                *v /= denom;
            }
        }
        self.push("l1_normalize_rows", t, Op::L1NormalizeRows { a, eps }, &[a])
    }

    /// Training-mode batch normalization over the rows of an `[n, f]` matrix.
    ///
    /// Normalizes with the biased batch variance and returns the batch mean
    /// and unbiased variance for the caller's running statistics.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<(Var, BatchStats)> {
        let tx = self.value(x);
        let (n, f) = matrix_dims("batch_norm", tx)?;
        self.check_feature_params(gamma, beta, f)?;
        if n == 0 {
            return Err(Error::Usage("batch_norm on an empty batch".into()));
        }
        let mut mean = vec![0.0; f];
        for row in tx.data().chunks(f) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut sq = vec![0.0; f];
        for row in tx.data().chunks(f) {
            for ((s, v), m) in sq.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let biased: Vec<f64> = sq.iter().map(|s| s / n as f64).collect();
        let unbiased: Vec<f64> = sq
            .iter()
            .map(|s| if n > 1 { s / (n - 1) as f64 } else { 0.0 })
            .collect();
        let inv_std: Vec<f64> = biased.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let (xhat, out) = self.normalize_features(tx, &mean, &inv_std, gamma, beta);
        let op = Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            batch_coupled: true,
        };
        let v = self.push("batch_norm", out, op, &[x, gamma, beta])?;
        Ok((
            v,
            BatchStats {
                mean,
                var: unbiased,
            },
        ))
    }

    /// Inference-mode batch normalization with fixed running statistics.
    pub fn batch_norm_infer(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running_mean: &[f64],
        running_var: &[f64],
        eps: f64,
    ) -> Result<Var> {
        let tx = self.value(x);
        let (_, f) = matrix_dims("batch_norm", tx)?;
        self.check_feature_params(gamma, beta, f)?;
        if running_mean.len() != f || running_var.len() != f {
            return Err(Error::Shape {
                op: "batch_norm",
                left: vec![f],
                right: vec![running_mean.len(), running_var.len()],
            });
        }
        let inv_std: Vec<f64> = running_var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let (xhat, out) = self.normalize_features(tx, running_mean, &inv_std, gamma, beta);
        let op = Op::BatchNorm {
            x,
            gamma,
            beta,
            xhat,
            inv_std,
            batch_coupled: false,
        };
        self.push("batch_norm", out, op, &[x, gamma, beta])
    }

    fn check_feature_params(&self, gamma: Var, beta: Var, f: usize) -> Result<()> {
        for p in [gamma, beta] {
            let t = self.value(p);
            if t.shape() != [f] {
                return Err(Error::Shape {
                    op: "batch_norm",
                    left: vec![f],
                    right: t.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    fn normalize_features(
        &self,
        tx: &Tensor,
        mean: &[f64],
        inv_std: &[f64],
        gamma: Var,
        beta: Var,
    ) -> (Vec<f64>, Tensor) {
        let f = mean.len();
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = Vec::with_capacity(tx.numel());
        let mut out = Vec::with_capacity(tx.numel());
        for row in tx.data().chunks(f) {
            for j in 0..f {
                let h = (row[j] - mean[j]) * inv_std[j];
                xhat.push(h);
                out.push(g[j] * h + b[j]);
            }
        }
        let shape = tx.shape().to_vec();
        (xhat, Tensor { shape, data: out })
    }

    /// Inverted dropout: in training, zeroes each entry with probability
    /// `rate` and scales survivors by `1/(1−rate)`. Outside training it
    /// returns `a` itself.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Usage(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 - rate;
        let ta = self.value(a);
        let mask: Vec<f64> = (0..ta.numel())
            .map(|_| {
                if rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let data = ta.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        self.push("dropout", t, Op::Dropout { a, mask }, &[a])
    }

    /// Spectral angle between matching rows of `a` and `b`.
    pub fn sad_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        check_same_shape("sad", ta, tb)?;
        let c = ta.cols();
        let mut out = Vec::with_capacity(ta.rows());
        for (ra, rb) in ta.data().chunks(c).zip(tb.data().chunks(c)) {
            out.push(sad_terms(ra, rb)?.angle);
        }
        let t = Tensor::new(row_reduced_shape(ta), out)?;
        self.push("sad", t, Op::SadRows(a, b), &[a, b])
    }

    /// Per-row sum of square roots; entries must be nonnegative.
    pub fn l_half_rows(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let c = ta.cols();
        let out = ta
            .data()
            .chunks(c)
            .map(l_half_row)
            .collect::<Result<Vec<_>>>()?;
        let t = Tensor::new(row_reduced_shape(ta), out)?;
        self.push("l_half_penalty", t, Op::LHalfRows(a), &[a])
    }

    /// Selects rows of a matrix (or entries of a vector) by index.
    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        let ta = self.value(a);
        let n = if ta.ndim() == 0 { 1 } else { ta.shape()[0] };
        let width = ta.numel() / n.max(1);
        let mut data = Vec::with_capacity(rows.len() * width);
        for &r in rows {
            if r >= n {
                return Err(Error::Usage(format!("gather_rows index {r} out of {n}")));
            }
            data.extend_from_slice(&ta.data()[r * width..(r + 1) * width]);
        }
        let mut shape = ta.shape().to_vec();
        if shape.is_empty() {
            shape.push(rows.len());
        } else {
            shape[0] = rows.len();
        }
        let t = Tensor::new(shape, data)?;
        let op = Op::GatherRows {
            a,
            rows: rows.to_vec(),
        };
        self.push("gather_rows", t, op, &[a])
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().sum();
        self.push("sum", Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        if ta.numel() == 0 {
            return Err(Error::Usage("mean of an empty tensor".into()));
        }
        let s = ta.data().iter().sum::<f64>() / ta.numel() as f64;
        self.push("mean", Tensor::scalar(s), Op::Mean(a), &[a])
    }

    /// Reverse-mode sweep from a scalar `root`.
    ///
    /// Every leaf created with [`Graph::param`] gets a gradient, zero if the
    /// root does not depend on it.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.value(root).numel() != 1 {
            return Err(Error::Usage(format!(
                "backward from non-scalar of shape {:?}",
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::new(self.value(root).shape().to_vec(), vec![1.0])?);

        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads)?;
            grads[i] = Some(g);
        }

        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && grads[i].is_none() {
                grads[i] = Some(Tensor::zeros(node.value.shape()));
            }
        }
        for g in grads.iter().flatten() {
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "backward" });
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, delta: Vec<f64>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => {
                for (e, d) in existing.data_mut().iter_mut().zip(&delta) {
                    *e += d;
                }
            }
            slot @ None => {
                let shape = self.nodes[v.0].value.shape().to_vec();
                *slot = Some(Tensor { shape, data: delta });
            }
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let gd = g.data();
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k) = (ta.shape()[0], ta.shape()[1]);
                let n = tb.shape()[1];
                if self.requires_grad(*a) {
                    let mut da = vec![0.0; m * k];
                    gemm(m, n, k, gd, Layout::Normal, tb.data(), Layout::Transposed, &mut da, false);
                    self.accumulate(grads, *a, da);
                }
                if self.requires_grad(*b) {
                    let mut db = vec![0.0; k * n];
                    gemm(k, m, n, ta.data(), Layout::Transposed, gd, Layout::Normal, &mut db, false);
                    self.accumulate(grads, *b, db);
                }
            }
            Op::Transpose(a) => {
                let gt = g.transposed()?;
                self.accumulate(grads, *a, gt.into_data());
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, gd.to_vec());
                self.accumulate(grads, *b, gd.to_vec());
            }
            Op::AddRowBias(a, bias) => {
                self.accumulate(grads, *a, gd.to_vec());
                let c = out.cols();
                let mut db = vec![0.0; c];
                for row in gd.chunks(c) {
                    for (d, v) in db.iter_mut().zip(row) {
                        *d += v;
                    }
                }
                self.accumulate(grads, *bias, db);
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let da = gd.iter().zip(tb.data()).map(|(x, y)| x * y).collect();
                let db = gd.iter().zip(ta.data()).map(|(x, y)| x * y).collect();
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *b, db);
            }
            Op::MulRow(a, w) => {
                let (ta, tw) = (self.value(*a), self.value(*w));
                let c = tw.numel();
                let mut da = gd.to_vec();
                let mut dw = vec![0.0; c];
                for (row_g, (row_a, row_da)) in
                    gd.chunks(c).zip(ta.data().chunks(c).zip(da.chunks_mut(c)))
                {
                    for j in 0..c {
                        row_da[j] *= tw.data()[j];
                        dw[j] += row_g[j] * row_a[j];
                    }
                }
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *w, dw);
            }
            Op::Scale(a, factor) => {
                self.accumulate(grads, *a, gd.iter().map(|x| x * factor).collect());
            }
            Op::Sigmoid(a) => {
                let da = gd
                    .iter()
                    .zip(out.data())
                    .map(|(g, y)| g * y * (1.0 - y))
                    .collect();
                self.accumulate(grads, *a, da);
            }
            Op::Relu(a) => {
                let ta = self.value(*a);
                let da = gd
                    .iter()
                    .zip(ta.data())
                    .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                    .collect();
                self.accumulate(grads, *a, da);
            }
            Op::Reshape(a) => self.accumulate(grads, *a, gd.to_vec()),
            Op::SoftmaxRows(a) => {
                let c = out.cols();
                let mut da = vec![0.0; gd.len()];
                for ((row_g, row_y), row_d) in
                    gd.chunks(c).zip(out.data().chunks(c)).zip(da.chunks_mut(c))
                {
                    let inner: f64 = row_g.iter().zip(row_y).map(|(g, y)| g * y).sum();
                    for j in 0..c {
                        row_d[j] = row_y[j] * (row_g[j] - inner);
                    }
                }
                self.accumulate(grads, *a, da);
            }
            Op::BatchMatMul { a, b, groups } => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.shape()[1], ta.shape()[2], tb.shape()[2]);
                if self.requires_grad(*a) {
                    let mut da = vec![0.0; groups * m * k];
                    for i in 0..*groups {
                        gemm(
                            m,
                            n,
                            k,
                            &gd[i * m * n..(i + 1) * m * n],
                            Layout::Normal,
                            &tb.data()[i * k * n..(i + 1) * k * n],
                            Layout::Transposed,
                            &mut da[i * m * k..(i + 1) * m * k],
                            false,
                        );
                    }
                    self.accumulate(grads, *a, da);
                }
                if self.requires_grad(*b) {
                    let mut db = vec![0.0; groups * k * n];
                    for i in 0..*groups {
                        gemm(
                            k,
                            m,
                            n,
                            &ta.data()[i * m * k..(i + 1) * m * k],
                            Layout::Transposed,
                            &gd[i * m * n..(i + 1) * m * n],
                            Layout::Normal,
                            &mut db[i * k * n..(i + 1) * k * n],
                            false,
                        );
                    }
                    self.accumulate(grads, *b, db);
                }
            }
            Op::FoldRows { a, groups } => {
                let ta = self.value(*a);
                let (r, c) = (ta.shape()[1], ta.shape()[2]);
                let mut da = Vec::with_capacity(groups * r * c);
                for gi in 0..*groups {
                    let row = &gd[gi * c..(gi + 1) * c];
                    for _ in 0..r {
                        da.extend_from_slice(row);
                    }
                }
                self.accumulate(grads, *a, da);
            }
            Op::L1NormalizeRows { a, eps } => {
                let ta = self.value(*a);
                let c = ta.cols();
                let mut da = vec![0.0; gd.len()];
                for (((row_g, row_x), row_y), row_d) in gd
                    .chunks(c)
                    .zip(ta.data().chunks(c))
                    .zip(out.data().chunks(c))
                    .zip(da.chunks_mut(c))
                {
                    let denom = row_x.iter().map(|x| x.abs()).sum::<f64>() + eps;
                    if denom == 0.0 {
                        continue;
                    }
                    let inner: f64 = row_g.iter().zip(row_y).map(|(g, y)| g * y).sum();
                    for j in 0..c {
                        let sign = if row_x[j] > 0.0 {
                            1.0
                        } else if row_x[j] < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        row_d[j] = (row_g[j] - sign * inner) / denom;
                    }
                }
                self.accumulate(grads, *a, da);
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_coupled,
            } => {
                let f = inv_std.len();
                let n = gd.len() / f;
                let gam = self.value(*gamma).data();
                let mut dgamma = vec![0.0; f];
                let mut dbeta = vec![0.0; f];
                for (row_g, row_h) in gd.chunks(f).zip(xhat.chunks(f)) {
                    for j in 0..f {
                        dgamma[j] += row_g[j] * row_h[j];
                        dbeta[j] += row_g[j];
                    }
                }
                if self.requires_grad(*x) {
                    let mut dx = vec![0.0; gd.len()];
                    for (row_g, (row_h, row_d)) in
                        gd.chunks(f).zip(xhat.chunks(f).zip(dx.chunks_mut(f)))
                    {
                        for j in 0..f {
                            let dh = row_g[j] * gam[j];
                            row_d[j] = if *batch_coupled {
                                // dx = inv_std/n · (n·dh − Σdh − xhat·Σ(dh·xhat))
                                inv_std[j] / n as f64
                                    * (n as f64 * dh
                                        - gam[j] * dbeta[j]
                                        - row_h[j] * gam[j] * dgamma[j])
                            } else {
                                dh * inv_std[j]
                            };
                        }
                    }
                    self.accumulate(grads, *x, dx);
                }
                self.accumulate(grads, *gamma, dgamma);
                self.accumulate(grads, *beta, dbeta);
            }
            Op::Dropout { a, mask } => {
                let da = gd.iter().zip(mask).map(|(g, m)| g * m).collect();
                self.accumulate(grads, *a, da);
            }
            Op::SadRows(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let c = ta.cols();
                let mut da = vec![0.0; ta.numel()];
                let mut db = vec![0.0; tb.numel()];
                for (r, ((ra, rb), gr)) in ta.data().chunks(c).zip(tb.data().chunks(c)).zip(gd).enumerate() {
                    let t = sad_terms(ra, rb)?;
                    let dtheta_dcos = -1.0 / (1.0 - t.cos * t.cos).max(ACOS_GRAD_FLOOR).sqrt();
                    let nn = t.norm_a * t.norm_b;
                    let scale = gr * dtheta_dcos;
                    for j in 0..c {
                        da[r * c + j] =
                            scale * (rb[j] / nn - t.dot * ra[j] / (t.norm_a * t.norm_a * nn));
                        db[r * c + j] =
                            scale * (ra[j] / nn - t.dot * rb[j] / (t.norm_b * t.norm_b * nn));
                    }
                }
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *b, db);
            }
            Op::LHalfRows(a) => {
                let ta = self.value(*a);
                let c = ta.cols();
                let mut da = vec![0.0; ta.numel()];
                for ((row_x, row_d), gr) in ta.data().chunks(c).zip(da.chunks_mut(c)).zip(gd) {
                    for (x, d) in row_x.iter().zip(row_d.iter_mut()) {
                        // subgradient 0 at the kink
                        *d = if *x > 0.0 { gr * 0.5 / x.sqrt() } else { 0.0 };
                    }
                }
                self.accumulate(grads, *a, da);
            }
            Op::GatherRows { a, rows } => {
                let ta = self.value(*a);
                let n = if ta.ndim() == 0 { 1 } else { ta.shape()[0] };
                let width = ta.numel() / n.max(1);
                let mut da = vec![0.0; ta.numel()];
                for (k, &r) in rows.iter().enumerate() {
                    for j in 0..width {
                        da[r * width + j] += gd[k * width + j];
                    }
                }
                self.accumulate(grads, *a, da);
            }
            Op::Sum(a) => {
                let n = self.value(*a).numel();
                self.accumulate(grads, *a, vec![gd[0]; n]);
            }
            Op::Mean(a) => {
                let n = self.value(*a).numel();
                self.accumulate(grads, *a, vec![gd[0] / n as f64; n]);
            }
        }
        Ok(())
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
