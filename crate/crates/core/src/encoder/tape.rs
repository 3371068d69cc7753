//! Reverse-mode differentiation over [`Tensor`]s.

use super::params::{ParamId, ParamStore};
use super::tensor::{Scalar, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    /// Normalized input and per-row 1/σ are kept for the backward pass.
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
    },
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    MeanRows(Var),
}

enum Value<T> {
    Param(ParamId),
    Owned(Tensor<T>),
}

struct Node<T> {
    op: Op,
    value: Value<T>,
    needs_grad: bool,
    /// LayerNorm cache: normalized rows and 1/σ per row.
    cache: Option<(Tensor<T>, Vec<f64>)>,
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Records a forward computation against a borrowed parameter store.
pub struct Tape<'p, T> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        match &self.nodes[v.0].value {
            Value::Param(id) => self.params.get(*id),
            Value::Owned(t) => t,
        }
    }

    fn push(&mut self, op: Op, value: Tensor<T>, needs_grad: bool) -> Var {
        debug_assert!(value.all_finite(), "non-finite value from {op:?}");
        self.nodes.push(Node {
            op,
            value: Value::Owned(value),
            needs_grad,
            cache: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn grad_any(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(Op::Input, t, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            op: Op::Param(id),
            value: Value::Param(id),
            needs_grad: true,
            cache: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.cols(), y.rows(), "matmul {:?} x {:?}", x.shape(), y.shape());
        let out = x.matmul(y);
        let g = self.grad_any(&[a, b]);
        self.push(Op::MatMul(a, b), out, g)
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.cols(), y.cols(), "matmul_t {:?} x {:?}ᵀ", x.shape(), y.shape());
        let out = x.matmul_t(y);
        let g = self.grad_any(&[a, b]);
        self.push(Op::MatMulT(a, b), out, g)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "add");
        let out = x.zip(y, |p, q| p + q);
        let g = self.grad_any(&[a, b]);
        self.push(Op::Add(a, b), out, g)
    }

    /// Adds the `1 × c` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!((y.rows(), y.cols()), (1, x.cols()), "add_row {:?} + {:?}", x.shape(), y.shape());
        let mut out = x.clone();
        let c = x.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v = *v + y.data()[i % c];
        }
        let g = self.grad_any(&[a, b]);
        self.push(Op::AddRow(a, b), out, g)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "sub");
        let out = x.zip(y, |p, q| p - q);
        let g = self.grad_any(&[a, b]);
        self.push(Op::Sub(a, b), out, g)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "mul");
        let out = x.zip(y, |p, q| p * q);
        let g = self.grad_any(&[a, b]);
        self.push(Op::Mul(a, b), out, g)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let k = T::of(s);
        let out = self.value(a).map(|x| x * k);
        let g = self.grad_any(&[a]);
        self.push(Op::Scale(a, s), out, g)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(T::zero()));
        let g = self.grad_any(&[a]);
        self.push(Op::Relu(a), out, g)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| T::one() / (T::one() + (-x).exp()));
        let g = self.grad_any(&[a]);
        self.push(Op::Sigmoid(a), out, g)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            let row = x.row(r);
            let m = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
            let e: Vec<f64> = row.iter().map(|v| (v.as_f64() - m).exp()).collect();
            let z: f64 = e.iter().sum();
            for (c, v) in e.into_iter().enumerate() {
                out.set(r, c, T::of(v / z));
            }
        }
        let g = self.grad_any(&[a]);
        self.push(Op::SoftmaxRows(a), out, g)
    }

    /// Row-wise layer normalization with affine `1 × c` scale and shift.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let xv = self.value(x);
        let (gv, bv) = (self.value(gamma), self.value(beta));
        let (n, c) = (xv.rows(), xv.cols());
        assert_eq!(gv.shape(), [1, c], "layer_norm scale");
        assert_eq!(bv.shape(), [1, c], "layer_norm shift");
        let mut xhat = Tensor::zeros(n, c);
        let mut out = Tensor::zeros(n, c);
        let mut inv_std = Vec::with_capacity(n);
        for r in 0..n {
            let row: Vec<f64> = xv.row(r).iter().map(|v| v.as_f64()).collect();
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(is);
            for (k, v) in row.iter().enumerate() {
                let h = (v - mean) * is;
                xhat.set(r, k, T::of(h));
                out.set(r, k, T::of(h * gv.data()[k].as_f64() + bv.data()[k].as_f64()));
            }
        }
        let g = self.grad_any(&[x, gamma, beta]);
        let v = self.push(Op::LayerNorm { x, gamma, beta }, out, g);
        self.nodes[v.0].cache = Some((xhat, inv_std));
        v
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Tensor::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.rows(), rows, "concat_cols row counts");
            for r in 0..rows {
                for c in 0..t.cols() {
                    out.set(r, off + c, t.get(r, c));
                }
            }
            off += t.cols();
        }
        let g = self.grad_any(parts);
        self.push(Op::ConcatCols(parts.to_vec()), out, g)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let t = self.value(a);
        assert!(start + len <= t.cols(), "slice_cols out of range");
        let mut out = Tensor::zeros(t.rows(), len);
        for r in 0..t.rows() {
            for c in 0..len {
                out.set(r, c, t.get(r, start + c));
            }
        }
        let g = self.grad_any(&[a]);
        self.push(Op::SliceCols(a, start), out, g)
    }

    /// Column means as a `1 × c` row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let n = t.rows() as f64;
        let out = t.sum_rows().map(|x| x / T::of(n));
        let g = self.grad_any(&[a]);
        self.push(Op::MeanRows(a), out, g)
    }

    /// Hash of which side of zero every ReLU input lies on. Two evaluations
    /// with equal signatures ran through the same linear pieces.
    pub fn relu_signature(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for node in &self.nodes {
            if let Op::Relu(a) = node.op {
                for x in self.value(a).data() {
                    (*x > T::zero()).hash(&mut h);
                }
            }
        }
        h.finish()
    }

    /// Propagates the seed gradients back through the tape and returns one
    /// gradient tensor per parameter of the store (zeros for unused ones).
    pub fn backward(&self, seeds: &[(Var, Tensor<T>)]) -> Vec<Tensor<T>> {
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        for (v, g) in seeds {
            assert_eq!(self.value(*v).shape(), g.shape(), "seed shape");
            accumulate(&mut grads, *v, g.clone());
        }
        let mut out = self.params.zeros_like();
        for i in (0..self.nodes.len()).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let want = |v: &Var| self.nodes[v.0].needs_grad;
            match &node.op {
                Op::Input => {}
                Op::Param(id) => out[id.index()].add_assign(&g),
                Op::MatMul(a, b) => {
                    if want(a) {
                        accumulate(&mut grads, *a, g.matmul_t(self.value(*b)));
                    }
                    if want(b) {
                        accumulate(&mut grads, *b, self.value(*a).t_matmul(&g));
                    }
                }
                Op::MatMulT(a, b) => {
                    if want(a) {
                        accumulate(&mut grads, *a, g.matmul(self.value(*b)));
                    }
                    if want(b) {
                        accumulate(&mut grads, *b, g.t_matmul(self.value(*a)));
                    }
                }
                Op::Add(a, b) => {
                    if want(a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if want(b) {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::AddRow(a, b) => {
                    if want(b) {
                        accumulate(&mut grads, *b, g.sum_rows());
                    }
                    if want(a) {
                        accumulate(&mut grads, *a, g);
                    }
                }
                Op::Sub(a, b) => {
                    if want(b) {
                        accumulate(&mut grads, *b, g.map(|x| -x));
                    }
                    if want(a) {
                        accumulate(&mut grads, *a, g);
                    }
                }
                Op::Mul(a, b) => {
                    if want(a) {
                        accumulate(&mut grads, *a, g.zip(self.value(*b), |p, q| p * q));
                    }
                    if want(b) {
                        accumulate(&mut grads, *b, g.zip(self.value(*a), |p, q| p * q));
                    }
                }
                Op::Scale(a, s) => {
                    let k = T::of(*s);
                    accumulate(&mut grads, *a, g.map(|x| x * k));
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    accumulate(&mut grads, *a, g.zip(x, |p, q| if q > T::zero() { p } else { T::zero() }));
                }
                Op::Sigmoid(a) => {
                    let y = self.value(Var(i));
                    accumulate(&mut grads, *a, g.zip(y, |p, s| p * s * (T::one() - s)));
                }
                Op::SoftmaxRows(a) => {
                    let y = self.value(Var(i));
                    let mut dx = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let dot: f64 = g.row(r).iter().zip(y.row(r)).map(|(p, q)| p.as_f64() * q.as_f64()).sum();
                        for c in 0..y.cols() {
                            let v = y.get(r, c).as_f64() * (g.get(r, c).as_f64() - dot);
                            dx.set(r, c, T::of(v));
                        }
                    }
                    accumulate(&mut grads, *a, dx);
                }
                Op::LayerNorm { x, gamma, beta } => {
                    let (xhat, inv_std) = node.cache.as_ref().expect("layer norm cache");
                    let gv = self.value(*gamma);
                    let (n, c) = (xhat.rows(), xhat.cols());
                    if want(beta) {
                        accumulate(&mut grads, *beta, g.sum_rows());
                    }
                    if want(gamma) {
                        accumulate(&mut grads, *gamma, g.zip(xhat, |p, q| p * q).sum_rows());
                    }
                    if want(x) {
                        let mut dx = Tensor::zeros(n, c);
                        for r in 0..n {
                            let dh: Vec<f64> = (0..c).map(|k| g.get(r, k).as_f64() * gv.data()[k].as_f64()).collect();
                            let h: Vec<f64> = xhat.row(r).iter().map(|v| v.as_f64()).collect();
                            let s1: f64 = dh.iter().sum();
                            let s2: f64 = dh.iter().zip(&h).map(|(a, b)| a * b).sum();
                            let cf = c as f64;
                            for k in 0..c {
                                let v = inv_std[r] / cf * (cf * dh[k] - s1 - h[k] * s2);
                                dx.set(r, k, T::of(v));
                            }
                        }
                        accumulate(&mut grads, *x, dx);
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = self.value(*p).cols();
                        if want(p) {
                            let mut part = Tensor::zeros(g.rows(), w);
                            for r in 0..g.rows() {
                                for c in 0..w {
                                    part.set(r, c, g.get(r, off + c));
                                }
                            }
                            accumulate(&mut grads, *p, part);
                        }
                        off += w;
                    }
                }
                Op::SliceCols(a, start) => {
                    let src = self.value(*a);
                    let mut dx = Tensor::zeros(src.rows(), src.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            dx.set(r, start + c, g.get(r, c));
                        }
                    }
                    accumulate(&mut grads, *a, dx);
                }
                Op::MeanRows(a) => {
                    let n = self.value(*a).rows();
                    let k = T::of(1.0 / n as f64);
                    let mut dx = Tensor::zeros(n, g.cols());
                    for r in 0..n {
                        for c in 0..g.cols() {
                            dx.set(r, c, g.get(0, c) * k);
                        }
                    }
                    accumulate(&mut grads, *a, dx);
                }
            }
        }
        out
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
