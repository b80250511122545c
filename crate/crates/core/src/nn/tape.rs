//! Define-by-run reverse-mode differentiation.
//!
//! Every operation appends a node holding its value and whatever the
//! backward pass needs. [`Tape::backward`] walks the nodes in reverse and
//! accumulates gradients into the [`ParamStore`] the parameters came from.
//! Shape errors inside the tape are programming errors and panic; the layer
//! APIs check shapes and return errors.

use std::collections::HashMap;
use std::rc::Rc;

use super::params::{ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Key window of one attention query: rows `start..start + len` of the keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

/// Query-to-key windows plus an optional flat mask laid out window after
/// window (`true` = may attend).
#[derive(Clone, Debug)]
pub struct Windows {
    windows: Vec<Window>,
    offsets: Vec<usize>,
    mask: Option<Vec<bool>>,
}

impl Windows {
    pub fn new(windows: Vec<Window>, mask: Option<Vec<bool>>) -> Self {
        let mut offsets = Vec::with_capacity(windows.len() + 1);
        let mut acc = 0;
        for w in &windows {
            offsets.push(acc);
            acc += w.len;
        }
        offsets.push(acc);
        if let Some(m) = &mask {
            assert_eq!(m.len(), acc, "mask length");
        }
        Self { windows, offsets, mask }
    }

    /// Each query attends to the rows of its own group, e.g. the markets of
    /// its instance. `groups[i]` is the window of query `i`.
    pub fn grouped(groups: &[Window]) -> Self {
        Self::new(groups.to_vec(), None)
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Total number of (query, key) slots.
    pub fn slots(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn window(&self, q: usize) -> Window {
        self.windows[q]
    }

    pub fn offset(&self, q: usize) -> usize {
        self.offsets[q]
    }

    pub fn allowed(&self, q: usize, j: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[self.offsets[q] + j])
    }
}

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Rc<Vec<usize>>),
    ScatterAddRows(Var, Rc<Vec<usize>>),
    ScaleRows(Var, Rc<Vec<f64>>),
    BatchNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, inv_std: Vec<f64> },
    Affine { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, inv_std: Vec<f64> },
    Attention { q: Var, k: Var, v: Var, heads: usize, windows: Rc<Windows>, probs: Vec<f64> },
    Pointer { q: Var, k: Var, windows: Rc<Windows>, clip: f64, scale: f64, probs: Vec<f64>, tanh: Vec<f64> },
    GatherFlat(Var, Rc<Vec<usize>>),
    Sum(Var),
    WeightedSum(Var, Rc<Vec<f64>>),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients of every node with respect to one scalar.
pub struct Grads(Vec<Option<Vec<f64>>>);

impl Grads {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.0[v.0].as_deref()
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    updates: Vec<(String, Tensor)>,
}

pub(crate) const BN_EPS: f64 = 1e-5;

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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        let t = self.value(v);
        (t.rows(), t.cols())
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// The parameter as a node; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Param(id));
        self.params.insert(id, v);
        v
    }

    /// Running-statistics updates queued by train-mode batch norm.
    pub fn take_buffer_updates(&mut self) -> Vec<(String, Tensor)> {
        std::mem::take(&mut self.updates)
    }

    pub(crate) fn queue_buffer(&mut self, name: String, value: Tensor) {
        self.updates.push((name, value));
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (n, k) = self.dims(a);
        let (k2, m) = self.dims(b);
        assert_eq!(k, k2, "matmul inner dims");
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let x = av[i * k + p];
                if x != 0.0 {
                    for (o, &y) in row.iter_mut().zip(&bv[p * m..(p + 1) * m]) {
                        *o += x * y;
                    }
                }
            }
        }
        self.push(Tensor::raw(vec![n, m], out), Op::MatMul(a, b))
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        assert_eq!(self.value(a).shape(), self.value(b).shape(), "elementwise shapes");
        let data = self.value(a).data().iter().zip(self.value(b).data()).map(|(&x, &y)| f(x, y)).collect();
        let shape = self.value(a).shape().to_vec();
        self.push(Tensor::raw(shape, data), op)
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let data = self.value(a).data().iter().map(|&x| f(x)).collect();
        let shape = self.value(a).shape().to_vec();
        self.push(Tensor::raw(shape, data), op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// `a` plus the row vector `b` on every row.
    pub fn add_bias(&mut self, a: Var, b: Var) -> Var {
        let (n, m) = self.dims(a);
        assert_eq!(self.value(b).len(), m, "bias width");
        let bv = self.value(b).data();
        let mut data = self.value(a).data().to_vec();
        for r in 0..n {
            for (x, &y) in data[r * m..(r + 1) * m].iter_mut().zip(bv) {
                *x += y;
            }
        }
        let shape = self.value(a).shape().to_vec();
        self.push(Tensor::raw(shape, data), Op::AddBias(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| x.max(0.0), Op::Relu(a))
    }

    /// Sign pattern of every ReLU input on the tape, in recording order.
    /// Two evaluations with equal patterns lie on the same linear piece.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for n in &self.nodes {
            if let Op::Relu(a) = n.op {
                out.extend(self.value(a).data().iter().map(|&x| x > 0.0));
            }
        }
        out
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let n = self.dims(parts[0]).0;
        let widths: Vec<usize> = parts.iter().map(|&p| self.dims(p).1).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(n * total);
        for r in 0..n {
            for &p in parts {
                assert_eq!(self.dims(p).0, n, "concat rows");
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        self.push(Tensor::raw(vec![n, total], data), Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let (n, m) = self.dims(a);
        assert!(start + width <= m, "slice out of range");
        let mut data = Vec::with_capacity(n * width);
        for r in 0..n {
            data.extend_from_slice(&self.value(a).row(r)[start..start + width]);
        }
        self.push(Tensor::raw(vec![n, width], data), Op::SliceCols(a, start))
    }

    pub fn gather_rows(&mut self, a: Var, idx: Rc<Vec<usize>>) -> Var {
        let m = self.dims(a).1;
        let mut data = Vec::with_capacity(idx.len() * m);
        for &r in idx.iter() {
            data.extend_from_slice(self.value(a).row(r));
        }
        self.push(Tensor::raw(vec![idx.len(), m], data), Op::GatherRows(a, idx))
    }

    /// Row `r` of `a` is added into output row `idx[r]`.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Rc<Vec<usize>>, out_rows: usize) -> Var {
        let (n, m) = self.dims(a);
        assert_eq!(idx.len(), n, "one target per row");
        let mut data = vec![0.0; out_rows * m];
        for (r, &t) in idx.iter().enumerate() {
            for (o, &x) in data[t * m..(t + 1) * m].iter_mut().zip(self.value(a).row(r)) {
                *o += x;
            }
        }
        self.push(Tensor::raw(vec![out_rows, m], data), Op::ScatterAddRows(a, idx))
    }

    pub fn scale_rows(&mut self, a: Var, w: Rc<Vec<f64>>) -> Var {
        let (n, m) = self.dims(a);
        assert_eq!(w.len(), n, "one weight per row");
        let mut data = self.value(a).data().to_vec();
        for (r, &s) in w.iter().enumerate() {
            data[r * m..(r + 1) * m].iter_mut().for_each(|x| *x *= s);
        }
        self.push(Tensor::raw(vec![n, m], data), Op::ScaleRows(a, w))
    }

    /// Per-column normalization over the rows with batch statistics.
    /// Returns the output and the batch mean and (biased) variance.
    pub(crate) fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var) -> (Var, Vec<f64>, Vec<f64>) {
        let (n, m) = self.dims(x);
        let xv = self.value(x).data();
        let mut mean = vec![0.0; m];
        let mut var = vec![0.0; m];
        for r in 0..n {
            for c in 0..m {
                mean[c] += xv[r * m + c];
            }
        }
        mean.iter_mut().for_each(|s| *s /= n as f64);
        for r in 0..n {
            for c in 0..m {
                let d = xv[r * m + c] - mean[c];
                var[c] += d * d;
            }
        }
        var.iter_mut().for_each(|s| *s /= n as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let (out, xhat) = self.normalize(x, gamma, beta, &mean, &inv_std);
        let v = self.push(out, Op::BatchNorm { x, gamma, beta, xhat, inv_std });
        (v, mean, var)
    }

    /// Normalization with fixed statistics: a per-column affine map.
    pub(crate) fn fixed_norm(&mut self, x: Var, gamma: Var, beta: Var, mean: &[f64], var: &[f64]) -> Var {
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let (out, xhat) = self.normalize(x, gamma, beta, mean, &inv_std);
        self.push(out, Op::Affine { x, gamma, beta, xhat, inv_std })
    }

    fn normalize(&self, x: Var, gamma: Var, beta: Var, mean: &[f64], inv_std: &[f64]) -> (Tensor, Vec<f64>) {
        let (n, m) = self.dims(x);
        let (xv, g, b) = (self.value(x).data(), self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; n * m];
        let mut out = vec![0.0; n * m];
        for r in 0..n {
            for c in 0..m {
                let h = (xv[r * m + c] - mean[c]) * inv_std[c];
                xhat[r * m + c] = h;
                out[r * m + c] = g[c] * h + b[c];
            }
        }
        (Tensor::raw(vec![n, m], out), xhat)
    }

    /// Scaled dot-product attention with `heads` column blocks. Query `i`
    /// attends to the key rows of `windows.window(i)` that its mask allows;
    /// a query with nothing to attend gets a zero row.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, windows: Rc<Windows>) -> Var {
        let (nq, d) = self.dims(q);
        assert_eq!(self.dims(k).1, d, "key width");
        assert_eq!(self.dims(k).0, self.dims(v).0, "keys and values");
        assert_eq!(windows.len(), nq, "one window per query");
        assert_eq!(d % heads, 0, "heads divide width");
        let dv = self.dims(v).1;
        assert_eq!(dv % heads, 0, "heads divide value width");
        let (hd, hv) = (d / heads, dv / heads);
        let scale = 1.0 / (hd as f64).sqrt();
        let (qv, kv, vv) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let mut probs = vec![0.0; windows.slots() * heads];
        let mut out = vec![0.0; nq * dv];
        let mut scores = Vec::new();
        for i in 0..nq {
            let w = windows.window(i);
            let base = windows.offset(i) * heads;
            for h in 0..heads {
                let qi = &qv[i * d + h * hd..i * d + (h + 1) * hd];
                scores.clear();
                let mut top = f64::NEG_INFINITY;
                for j in 0..w.len {
                    let s = if windows.allowed(i, j) {
                        let kj = &kv[(w.start + j) * d + h * hd..(w.start + j) * d + (h + 1) * hd];
                        dot(qi, kj) * scale
                    } else {
                        f64::NEG_INFINITY
                    };
                    top = top.max(s);
                    scores.push(s);
                }
                if top == f64::NEG_INFINITY {
                    continue;
                }
                let z: f64 = scores.iter().map(|s| (s - top).exp()).sum();
                let p = &mut probs[base + h * w.len..base + (h + 1) * w.len];
                for j in 0..w.len {
                    p[j] = (scores[j] - top).exp() / z;
                    if p[j] > 0.0 {
                        let vj = &vv[(w.start + j) * dv + h * hv..(w.start + j) * dv + (h + 1) * hv];
                        for (o, &x) in out[i * dv + h * hv..i * dv + (h + 1) * hv].iter_mut().zip(vj) {
                            *o += p[j] * x;
                        }
                    }
                }
            }
        }
        self.push(Tensor::raw(vec![nq, dv], out), Op::Attention { q, k, v, heads, windows, probs })
    }

    /// Masked log-softmax of clipped compatibilities
    /// `clip · tanh(scale · q_i · k_j)` over each query's window. The output
    /// is flat, window after window; masked slots hold `-inf`.
    pub fn pointer_log_softmax(&mut self, q: Var, k: Var, windows: Rc<Windows>, clip: f64, scale: f64) -> Var {
        let (nq, d) = self.dims(q);
        assert_eq!(self.dims(k).1, d, "key width");
        assert_eq!(windows.len(), nq, "one window per query");
        let (qv, kv) = (self.value(q).data(), self.value(k).data());
        let slots = windows.slots();
        let mut out = vec![f64::NEG_INFINITY; slots];
        let mut probs = vec![0.0; slots];
        let mut th = vec![0.0; slots];
        for i in 0..nq {
            let w = windows.window(i);
            let off = windows.offset(i);
            let qi = &qv[i * d..(i + 1) * d];
            let mut top = f64::NEG_INFINITY;
            for j in 0..w.len {
                if windows.allowed(i, j) {
                    let t = (dot(qi, &kv[(w.start + j) * d..(w.start + j + 1) * d]) * scale).tanh();
                    th[off + j] = t;
                    out[off + j] = clip * t;
                    top = top.max(clip * t);
                }
            }
            assert!(top > f64::NEG_INFINITY, "every action masked");
            let z: f64 = out[off..off + w.len].iter().map(|u| (u - top).exp()).sum();
            let lz = top + z.ln();
            for j in 0..w.len {
                if windows.allowed(i, j) {
                    out[off + j] -= lz;
                    probs[off + j] = out[off + j].exp();
                }
            }
        }
        self.push(Tensor::raw(vec![slots], out), Op::Pointer { q, k, windows, clip, scale, probs, tanh: th })
    }

    /// The flat entries `idx` of `a`.
    pub fn gather_flat(&mut self, a: Var, idx: Rc<Vec<usize>>) -> Var {
        let data: Vec<f64> = idx.iter().map(|&i| self.value(a).data()[i]).collect();
        self.push(Tensor::raw(vec![data.len().max(1)], if data.is_empty() { vec![0.0] } else { data }), Op::GatherFlat(a, idx))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// `Σ w_i a_i` over the flat entries.
    pub fn weighted_sum(&mut self, a: Var, w: Rc<Vec<f64>>) -> Var {
        assert_eq!(w.len(), self.value(a).len(), "one weight per entry");
        let s = self.value(a).data().iter().zip(w.iter()).map(|(x, y)| x * y).sum();
        self.push(Tensor::scalar(s), Op::WeightedSum(a, w))
    }

    /// Reverse pass from the scalar `loss`. Parameter gradients are added
    /// to `store`; all node gradients are returned.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<Grads> {
        if self.value(loss).len() != 1 {
            return Err(contract(format!("loss must be a scalar, shape is {:?}", self.value(loss).shape())));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        for n in (0..=loss.0).rev() {
            let Some(g) = grads[n].take() else { continue };
            self.backprop(n, &g, &mut grads);
            if let Op::Param(id) = self.nodes[n].op {
                store.accumulate_grad(id, &g);
            }
            grads[n] = Some(g);
        }
        store.mark_grads_ready();
        Ok(Grads(grads))
    }

    fn backprop(&self, n: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[n];
        let val = |v: Var| self.value(v).data();
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (rows, k) = self.dims(*a);
                let m = self.dims(*b).1;
                let (av, bv) = (val(*a), val(*b));
                let ga = slot(grads, *a, rows * k);
                for i in 0..rows {
                    let gi = &g[i * m..(i + 1) * m];
                    for p in 0..k {
                        ga[i * k + p] += dot(gi, &bv[p * m..(p + 1) * m]);
                    }
                }
                let gb = slot(grads, *b, k * m);
                for i in 0..rows {
                    let gi = &g[i * m..(i + 1) * m];
                    for p in 0..k {
                        let x = av[i * k + p];
                        if x != 0.0 {
                            for (o, &y) in gb[p * m..(p + 1) * m].iter_mut().zip(gi) {
                                *o += x * y;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                add_into(slot(grads, *a, g.len()), g);
                add_into(slot(grads, *b, g.len()), g);
            }
            Op::AddBias(a, b) => {
                add_into(slot(grads, *a, g.len()), g);
                let m = self.value(*b).len();
                let gb = slot(grads, *b, m);
                for chunk in g.chunks(m) {
                    add_into(gb, chunk);
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * bv[i];
                }
                let gb = slot(grads, *b, g.len());
                for i in 0..g.len() {
                    gb[i] += g[i] * av[i];
                }
            }
            Op::Scale(a, s) => {
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * s;
                }
            }
            Op::Relu(a) => {
                let av = val(*a);
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    if av[i] > 0.0 {
                        ga[i] += g[i];
                    }
                }
            }
            Op::Tanh(a) => {
                let y = node.value.data();
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * (1.0 - y[i] * y[i]);
                }
            }
            Op::Sigmoid(a) => {
                let y = node.value.data();
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * y[i] * (1.0 - y[i]);
                }
            }
            Op::ConcatCols(parts) => {
                let total = node.value.cols();
                let rows = node.value.rows();
                let mut start = 0;
                for &p in parts {
                    let w = self.dims(p).1;
                    let gp = slot(grads, p, rows * w);
                    for r in 0..rows {
                        add_into(&mut gp[r * w..(r + 1) * w], &g[r * total + start..r * total + start + w]);
                    }
                    start += w;
                }
            }
            Op::SliceCols(a, start) => {
                let (rows, m) = self.dims(*a);
                let w = node.value.cols();
                let ga = slot(grads, *a, rows * m);
                for r in 0..rows {
                    add_into(&mut ga[r * m + start..r * m + start + w], &g[r * w..(r + 1) * w]);
                }
            }
            Op::GatherRows(a, idx) => {
                let (rows, m) = self.dims(*a);
                let ga = slot(grads, *a, rows * m);
                for (r, &src) in idx.iter().enumerate() {
                    add_into(&mut ga[src * m..(src + 1) * m], &g[r * m..(r + 1) * m]);
                }
            }
            Op::ScatterAddRows(a, idx) => {
                let (rows, m) = self.dims(*a);
                let ga = slot(grads, *a, rows * m);
                for (r, &t) in idx.iter().enumerate() {
                    add_into(&mut ga[r * m..(r + 1) * m], &g[t * m..(t + 1) * m]);
                }
            }
            Op::ScaleRows(a, w) => {
                let (rows, m) = self.dims(*a);
                let ga = slot(grads, *a, rows * m);
                for (r, &s) in w.iter().enumerate() {
                    for c in 0..m {
                        ga[r * m + c] += g[r * m + c] * s;
                    }
                }
            }
            Op::BatchNorm { x, gamma, beta, xhat, inv_std } => {
                let (rows, m) = self.dims(*x);
                let gv = val(*gamma);
                let mut sum_g = vec![0.0; m];
                let mut sum_gx = vec![0.0; m];
                for r in 0..rows {
                    for c in 0..m {
                        sum_g[c] += g[r * m + c];
                        sum_gx[c] += g[r * m + c] * xhat[r * m + c];
                    }
                }
                let nf = rows as f64;
                let gx = slot(grads, *x, rows * m);
                for r in 0..rows {
                    for c in 0..m {
                        let i = r * m + c;
                        gx[i] += gv[c] * inv_std[c] * (g[i] - sum_g[c] / nf - xhat[i] * sum_gx[c] / nf);
                    }
                }
                add_into(slot(grads, *gamma, m), &sum_gx);
                add_into(slot(grads, *beta, m), &sum_g);
            }
            Op::Affine { x, gamma, beta, xhat, inv_std } => {
                let (rows, m) = self.dims(*x);
                let gv = val(*gamma);
                let mut sum_g = vec![0.0; m];
                let mut sum_gx = vec![0.0; m];
                let gx = slot(grads, *x, rows * m);
                for r in 0..rows {
                    for c in 0..m {
                        let i = r * m + c;
                        gx[i] += g[i] * gv[c] * inv_std[c];
                        sum_g[c] += g[i];
                        sum_gx[c] += g[i] * xhat[i];
                    }
                }
                add_into(slot(grads, *gamma, m), &sum_gx);
                add_into(slot(grads, *beta, m), &sum_g);
            }
            Op::Attention { q, k, v, heads, windows, probs } => {
                self.attention_backward(g, (*q, *k, *v), *heads, windows, probs, grads);
            }
            Op::Pointer { q, k, windows, clip, scale, probs, tanh } => {
                let (nq, d) = self.dims(*q);
                let nk = self.dims(*k).0;
                let (qv, kv) = (val(*q).to_vec(), val(*k).to_vec());
                let mut gq = vec![0.0; nq * d];
                let mut gk = vec![0.0; nk * d];
                for i in 0..nq {
                    let w = windows.window(i);
                    let off = windows.offset(i);
                    let total: f64 = (0..w.len).filter(|&j| windows.allowed(i, j)).map(|j| g[off + j]).sum();
                    for j in 0..w.len {
                        if !windows.allowed(i, j) {
                            continue;
                        }
                        let du = g[off + j] - probs[off + j] * total;
                        let t = tanh[off + j];
                        let dz = du * clip * (1.0 - t * t) * scale;
                        if dz == 0.0 {
                            continue;
                        }
                        let row = w.start + j;
                        for c in 0..d {
                            gq[i * d + c] += dz * kv[row * d + c];
                            gk[row * d + c] += dz * qv[i * d + c];
                        }
                    }
                }
                add_into(slot(grads, *q, nq * d), &gq);
                add_into(slot(grads, *k, nk * d), &gk);
            }
            Op::GatherFlat(a, idx) => {
                let n = self.value(*a).len();
                let ga = slot(grads, *a, n);
                for (r, &i) in idx.iter().enumerate() {
                    ga[i] += g[r];
                }
            }
            Op::Sum(a) => {
                let n = self.value(*a).len();
                slot(grads, *a, n).iter_mut().for_each(|x| *x += g[0]);
            }
            Op::WeightedSum(a, w) => {
                let n = self.value(*a).len();
                let ga = slot(grads, *a, n);
                for i in 0..n {
                    ga[i] += g[0] * w[i];
                }
            }
        }
    }

    fn attention_backward(
        &self,
        g: &[f64],
        (q, k, v): (Var, Var, Var),
        heads: usize,
        windows: &Windows,
        probs: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) {
        let (nq, d) = self.dims(q);
        let (nk, dv) = self.dims(v);
        let (hd, hv) = (d / heads, dv / heads);
        let scale = 1.0 / (hd as f64).sqrt();
        let (qv, kv, vv) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let mut gq = vec![0.0; nq * d];
        let mut gk = vec![0.0; nk * d];
        let mut gvv = vec![0.0; nk * dv];
        let mut da = Vec::new();
        for i in 0..nq {
            let w = windows.window(i);
            let base = windows.offset(i) * heads;
            for h in 0..heads {
                let p = &probs[base + h * w.len..base + (h + 1) * w.len];
                let go = &g[i * dv + h * hv..i * dv + (h + 1) * hv];
                da.clear();
                let mut inner = 0.0;
                for j in 0..w.len {
                    let row = w.start + j;
                    let vj = &vv[row * dv + h * hv..row * dv + (h + 1) * hv];
                    let a = dot(go, vj);
                    da.push(a);
                    inner += p[j] * a;
                    if p[j] > 0.0 {
                        for (o, &x) in gvv[row * dv + h * hv..row * dv + (h + 1) * hv].iter_mut().zip(go) {
                            *o += p[j] * x;
                        }
                    }
                }
                for j in 0..w.len {
                    let ds = p[j] * (da[j] - inner) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    let row = w.start + j;
                    for c in 0..hd {
                        gq[i * d + h * hd + c] += ds * kv[row * d + h * hd + c];
                        gk[row * d + h * hd + c] += ds * qv[i * d + h * hd + c];
                    }
                }
            }
        }
        add_into(slot(grads, q, nq * d), &gq);
        add_into(slot(grads, k, nk * d), &gk);
        add_into(slot(grads, v, nk * dv), &gvv);
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax of a matrix, for inspection and tests.
pub fn softmax_rows(t: &Tensor) -> Tensor {
    let m = t.cols();
    let mut data = t.data().to_vec();
    for row in data.chunks_mut(m) {
        let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|x| (x - top).exp()).sum();
        row.iter_mut().for_each(|x| *x = (*x - top).exp() / z);
    }
    Tensor::raw(t.shape().to_vec(), data)
}
