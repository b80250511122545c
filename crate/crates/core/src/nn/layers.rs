use std::rc::Rc;

use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var, Windows};
use super::tensor::Tensor;
use crate::error::{contract, Result};

/// Batch-norm statistics source.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; running statistics are queued for update.
    Train,
    /// Running statistics.
    Infer,
}

fn width(tape: &Tape, x: Var, expect: usize, what: &str) -> Result<()> {
    let got = tape.value(x).cols();
    if got != expect {
        return Err(contract(format!("{what}: input width {got}, expected {expect}")));
    }
    Ok(())
}

/// `x W + b`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize, bias: bool, rng: &mut R) -> Result<Self> {
        let w = store.get_or_init(&format!("{name}.w"), &[in_dim, out_dim], in_dim, rng)?;
        let b = if bias { Some(store.get_or_init(&format!("{name}.b"), &[out_dim], in_dim, rng)?) } else { None };
        Ok(Self { w, b, in_dim, out_dim })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        width(tape, x, self.in_dim, "linear")?;
        let w = tape.param(store, self.w);
        let y = tape.matmul(x, w);
        Ok(match self.b {
            Some(b) => {
                let b = tape.param(store, b);
                tape.add_bias(y, b)
            }
            None => y,
        })
    }
}

/// Two affine maps with a ReLU between.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub first: Linear,
    pub second: Linear,
}

impl Mlp {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, dims: [usize; 3], rng: &mut R) -> Result<Self> {
        Ok(Self {
            first: Linear::new(store, &format!("{name}.0"), dims[0], dims[1], true, rng)?,
            second: Linear::new(store, &format!("{name}.1"), dims[1], dims[2], true, rng)?,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let h = self.first.forward(tape, store, x)?;
        let h = tape.relu(h);
        self.second.forward(tape, store, h)
    }
}

/// Per-feature batch normalization over rows.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub name: String,
    pub dim: usize,
}

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = super::tape::BN_EPS;

impl BatchNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        let gamma = store.get_or_with(&format!("{name}.gamma"), &[dim], || Tensor::filled(&[dim], 1.0))?;
        let beta = store.get_or_with(&format!("{name}.beta"), &[dim], || Tensor::zeros(&[dim]))?;
        for (suffix, init) in [("running_mean", 0.0), ("running_var", 1.0)] {
            let key = format!("{name}.{suffix}");
            if store.buffer(&key).is_none() {
                store.set_buffer(&key, Tensor::filled(&[dim], init));
            }
        }
        Ok(Self { gamma, beta, name: name.to_owned(), dim })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var, mode: Mode) -> Result<Var> {
        width(tape, x, self.dim, "batch norm")?;
        let gamma = tape.param(store, self.gamma);
        let beta = tape.param(store, self.beta);
        let mean_key = format!("{}.running_mean", self.name);
        let var_key = format!("{}.running_var", self.name);
        let running_mean = store.buffer(&mean_key).ok_or_else(|| contract("missing running mean"))?;
        let running_var = store.buffer(&var_key).ok_or_else(|| contract("missing running variance"))?;
        match mode {
            Mode::Train => {
                let n = tape.value(x).rows();
                if n < 2 {
                    return Err(contract("train-mode batch norm needs at least 2 rows"));
                }
                let (y, mean, var) = tape.batch_norm(x, gamma, beta);
                let unbias = n as f64 / (n as f64 - 1.0);
                let lerp = |old: &Tensor, new: &[f64], k: f64| {
                    let data = old.data().iter().zip(new).map(|(o, v)| (1.0 - BN_MOMENTUM) * o + BN_MOMENTUM * v * k).collect();
                    Tensor::new(&[self.dim], data).unwrap()
                };
                let new_mean = lerp(running_mean, &mean, 1.0);
                let new_var = lerp(running_var, &var, unbias);
                tape.queue_buffer(mean_key, new_mean);
                tape.queue_buffer(var_key, new_var);
                Ok(y)
            }
            Mode::Infer => {
                let (m, v) = (running_mean.data().to_vec(), running_var.data().to_vec());
                Ok(tape.fixed_norm(x, gamma, beta, &m, &v))
            }
        }
    }
}

/// Multi-head attention with separate query, key, value and output maps.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
}

impl MultiHeadAttention {
    /// Queries of width `query_dim` attend over rows of width `dim`.
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, query_dim: usize, dim: usize, heads: usize, rng: &mut R) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(contract(format!("{heads} heads do not divide width {dim}")));
        }
        Ok(Self {
            wq: Linear::new(store, &format!("{name}.wq"), query_dim, dim, false, rng)?,
            wk: Linear::new(store, &format!("{name}.wk"), dim, dim, false, rng)?,
            wv: Linear::new(store, &format!("{name}.wv"), dim, dim, false, rng)?,
            wo: Linear::new(store, &format!("{name}.wo"), dim, dim, false, rng)?,
            heads,
        })
    }

    /// Projected keys and values, reusable across many query batches.
    pub fn keys_values(&self, tape: &mut Tape, store: &ParamStore, kv: Var) -> Result<(Var, Var)> {
        Ok((self.wk.forward(tape, store, kv)?, self.wv.forward(tape, store, kv)?))
    }

    pub fn attend(&self, tape: &mut Tape, store: &ParamStore, queries: Var, keys: Var, values: Var, windows: Rc<Windows>) -> Result<Var> {
        if windows.len() != tape.value(queries).rows() {
            return Err(contract("one attention window per query"));
        }
        let nk = tape.value(keys).rows();
        for q in 0..windows.len() {
            let w = windows.window(q);
            if w.start + w.len > nk {
                return Err(contract("attention window outside the keys"));
            }
        }
        let q = self.wq.forward(tape, store, queries)?;
        let heads = tape.attention(q, keys, values, self.heads, windows);
        self.wo.forward(tape, store, heads)
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, queries: Var, kv: Var, windows: Rc<Windows>) -> Result<Var> {
        let (k, v) = self.keys_values(tape, store, kv)?;
        self.attend(tape, store, queries, k, v, windows)
    }
}

/// Standard LSTM cell; gates in the order input, forget, candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub input: Linear,
    pub recurrent: Linear,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            input: Linear::new(store, &format!("{name}.ih"), input, 4 * hidden, true, rng)?,
            recurrent: Linear::new(store, &format!("{name}.hh"), hidden, 4 * hidden, false, rng)?,
            hidden,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        width(tape, h, self.hidden, "lstm hidden")?;
        width(tape, c, self.hidden, "lstm cell")?;
        let rows = tape.value(x).rows();
        if tape.value(h).rows() != rows || tape.value(c).rows() != rows {
            return Err(contract("lstm rows differ"));
        }
        let a = self.input.forward(tape, store, x)?;
        let b = self.recurrent.forward(tape, store, h)?;
        let z = tape.add(a, b);
        let n = self.hidden;
        let gate = |tape: &mut Tape, i: usize| tape.slice_cols(z, i * n, n);
        let (zi, zf, zg, zo) = (gate(tape, 0), gate(tape, 1), gate(tape, 2), gate(tape, 3));
        let i = tape.sigmoid(zi);
        let f = tape.sigmoid(zf);
        let g = tape.tanh(zg);
        let o = tape.sigmoid(zo);
        let keep = tape.mul(f, c);
        let write = tape.mul(i, g);
        let c2 = tape.add(keep, write);
        let tc = tape.tanh(c2);
        let h2 = tape.mul(o, tc);
        Ok((h2, c2))
    }
}
