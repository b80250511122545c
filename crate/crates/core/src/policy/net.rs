use std::rc::Rc;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::graph::{build_bipartite, BipartiteGraph};
use crate::env::EnvState;
use crate::error::{contract, Error, Result};
use crate::model::{Solution, TppInstance};
use crate::nn::layers::{BN_EPS, BN_MOMENTUM};
use crate::nn::{BatchNorm, Checkpoint, Linear, LstmCell, Mlp, Mode, MultiHeadAttention, ParamStore, Tape, Tensor, Var, Window, Windows};

/// Weights of the demand context `g_K^t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandWeights {
    /// `d_k^t / d_k`.
    Normalized,
    /// `d_k^t` in units.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    /// Hidden width of the encoder feed-forward sublayer.
    pub ff_hidden: usize,
    pub clip: f64,
    pub demand_weights: DemandWeights,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { dim: 128, layers: 3, heads: 8, ff_hidden: 512, clip: 10.0, demand_weights: DemandWeights::Normalized }
    }
}

impl PolicyConfig {
    /// Width `dim`, with the other fields at their defaults and the
    /// feed-forward width kept at `4·dim`.
    pub fn with_dim(dim: usize) -> Self {
        Self { dim, ff_hidden: 4 * dim, ..Self::default() }
    }

    pub fn key_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn check(&self) -> Result<()> {
        if self.dim == 0 || self.heads == 0 || self.dim % self.heads != 0 {
            return Err(contract(format!("{} heads do not divide width {}", self.heads, self.dim)));
        }
        if self.layers == 0 || self.ff_hidden == 0 || !(self.clip > 0.0) {
            return Err(contract("layers, feed-forward width and clip must be positive"));
        }
        Ok(())
    }
}

/// How actions are chosen during a rollout.
#[derive(Clone, Copy, Debug)]
pub enum Decode<'a> {
    Sample,
    Greedy,
    /// Replays the given actions, one list per instance.
    Forced(&'a [Vec<usize>]),
}

struct EncoderLayer {
    mha: MultiHeadAttention,
    bn1: BatchNorm,
    ff: Mlp,
    bn2: BatchNorm,
}

/// Parameter handles of the network. The weights live in a [`ParamStore`].
pub struct Policy {
    config: PolicyConfig,
    depot_in: Linear,
    market_in: Linear,
    product_in: Linear,
    edge_in: Linear,
    gin_product: Mlp,
    gin_market: Mlp,
    encoder: Vec<EncoderLayer>,
    lstm: LstmCell,
    glimpse: MultiHeadAttention,
    query: Linear,
    key: Linear,
}

/// Row layout of a batch of instances stacked into one matrix.
pub struct Batch<'a> {
    pub instances: Vec<&'a TppInstance>,
    node_offset: Vec<usize>,
    product_offset: Vec<usize>,
    node_features: Tensor,
    depot_rows: Rc<Vec<usize>>,
    market_rows: Rc<Vec<usize>>,
    product_features: Tensor,
    edge_features: Tensor,
    edge_node: Rc<Vec<usize>>,
    edge_product: Rc<Vec<usize>>,
    node_owner: Rc<Vec<usize>>,
    product_owner: Rc<Vec<usize>>,
    inv_size: Rc<Vec<f64>>,
    windows: Vec<Window>,
}

impl<'a> Batch<'a> {
    pub fn new(instances: &[&'a TppInstance]) -> Result<Self> {
        if instances.is_empty() {
            return Err(contract("empty batch"));
        }
        let graphs: Vec<BipartiteGraph> = instances.iter().map(|i| build_bipartite(i)).collect();
        let mut b = Batch {
            instances: instances.to_vec(),
            node_offset: vec![0],
            product_offset: vec![0],
            node_features: Tensor::scalar(0.0),
            depot_rows: Rc::default(),
            market_rows: Rc::default(),
            product_features: Tensor::scalar(0.0),
            edge_features: Tensor::scalar(0.0),
            edge_node: Rc::default(),
            edge_product: Rc::default(),
            node_owner: Rc::default(),
            product_owner: Rc::default(),
            inv_size: Rc::default(),
            windows: Vec::new(),
        };
        let (mut nodes, mut depots, mut markets, mut products, mut edges) = (vec![], vec![], vec![], vec![], vec![]);
        let (mut edge_node, mut edge_product, mut node_owner, mut product_owner, mut inv) = (vec![], vec![], vec![], vec![], vec![]);
        for (j, g) in graphs.iter().enumerate() {
            let (no, po) = (b.node_offset[j], b.product_offset[j]);
            for (i, f) in g.nodes.iter().enumerate() {
                nodes.extend_from_slice(f);
                if i == 0 { depots.push(no) } else { markets.push(no + i) }
                node_owner.push(j);
                inv.push(1.0 / g.nodes.len() as f64);
            }
            for &d in &g.products {
                products.push(d);
                product_owner.push(j);
            }
            for e in &g.edges {
                edges.extend_from_slice(&e.features);
                edge_node.push(no + e.market);
                edge_product.push(po + e.product);
            }
            b.windows.push(Window { start: no, len: g.nodes.len() });
            b.node_offset.push(no + g.nodes.len());
            b.product_offset.push(po + g.products.len());
        }
        if edges.is_empty() {
            return Err(contract("batch has no offers"));
        }
        b.node_features = Tensor::matrix(nodes.len() / 2, 2, nodes)?;
        b.product_features = Tensor::matrix(products.len(), 1, products)?;
        b.edge_features = Tensor::matrix(edges.len() / 2, 2, edges)?;
        b.depot_rows = Rc::new(depots);
        b.market_rows = Rc::new(markets);
        b.edge_node = Rc::new(edge_node);
        b.edge_product = Rc::new(edge_product);
        b.node_owner = Rc::new(node_owner);
        b.product_owner = Rc::new(product_owner);
        b.inv_size = Rc::new(inv);
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn node_rows(&self) -> usize {
        *self.node_offset.last().unwrap()
    }

    /// First row of instance `j`'s nodes (its depot).
    pub fn node_offset(&self, j: usize) -> usize {
        self.node_offset[j]
    }
}

/// Encoder outputs for a batch.
#[derive(Clone, Copy, Debug)]
pub struct Encoded {
    /// Product embeddings `g^0`, one row per product.
    pub products: Var,
    /// Node embeddings after input embedding, `h^0`.
    pub initial: Var,
    /// Node embeddings after the attention layers, `h^N`.
    pub nodes: Var,
    /// Per-instance mean of `h^N` rows, `h_M`.
    pub global: Var,
}

/// Decoder state of one batch, advanced by [`Policy::decode_step`].
pub struct DecodeState<'a> {
    pub envs: Vec<EnvState<'a>>,
    hidden: Var,
    cell: Var,
    glimpse_k: Var,
    glimpse_v: Var,
    pointer_k: Var,
}

/// Output of one decode step.
pub struct StepOutput {
    /// Flat log-probabilities, instance after instance over its nodes;
    /// masked entries are `-inf`. Finished instances put all mass on the depot.
    pub log_probs: Var,
    pub windows: Rc<Windows>,
}

/// A batch of finished episodes.
pub struct Rollout {
    pub solutions: Vec<Solution>,
    /// Actions per instance after the starting depot, closing depot included.
    pub actions: Vec<Vec<usize>>,
    /// `Σ_t log p(a_t | s_t)` per instance.
    pub log_probs: Vec<f64>,
    /// Per step: gathered log-probabilities of the chosen actions and the
    /// instances they belong to.
    terms: Vec<(Var, Vec<usize>)>,
}

impl Rollout {
    pub fn objectives(&self) -> Vec<i64> {
        self.solutions.iter().map(|s| s.objective).collect()
    }

    /// `Σ_j w_j · log p(π_j)` as a tape scalar.
    pub fn weighted_log_prob(&self, tape: &mut Tape, weights: &[f64]) -> Result<Var> {
        if weights.len() != self.solutions.len() {
            return Err(contract("one weight per instance"));
        }
        let mut total: Option<Var> = None;
        for (v, owners) in &self.terms {
            let w = Rc::new(owners.iter().map(|&j| weights[j]).collect());
            let s = tape.weighted_sum(*v, w);
            total = Some(match total {
                Some(t) => tape.add(t, s),
                None => s,
            });
        }
        total.ok_or_else(|| contract("rollout without decisions"))
    }
}

impl Policy {
    /// Registers (or looks up) every parameter in `store`.
    pub fn new<R: Rng>(config: PolicyConfig, store: &mut ParamStore, rng: &mut R) -> Result<Self> {
        config.check()?;
        let d = config.dim;
        let mut encoder = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            encoder.push(EncoderLayer {
                mha: MultiHeadAttention::new(store, &format!("enc.{l}.mha"), d, d, config.heads, rng)?,
                bn1: BatchNorm::new(store, &format!("enc.{l}.bn1"), d)?,
                ff: Mlp::new(store, &format!("enc.{l}.ff"), [d, config.ff_hidden, d], rng)?,
                bn2: BatchNorm::new(store, &format!("enc.{l}.bn2"), d)?,
            });
        }
        Ok(Self {
            depot_in: Linear::new(store, "embed.depot", 2, d, true, rng)?,
            market_in: Linear::new(store, "embed.market", 2, d, true, rng)?,
            product_in: Linear::new(store, "embed.product", 1, d, true, rng)?,
            edge_in: Linear::new(store, "embed.edge", 2, d, true, rng)?,
            gin_product: Mlp::new(store, "gin.product", [d, d, d], rng)?,
            gin_market: Mlp::new(store, "gin.market", [d, d, d], rng)?,
            encoder,
            lstm: LstmCell::new(store, "dec.lstm", d, d, rng)?,
            glimpse: MultiHeadAttention::new(store, "dec.glimpse", 3 * d, d, config.heads, rng)?,
            query: Linear::new(store, "dec.query", d, d, false, rng)?,
            key: Linear::new(store, "dec.key", d, d, false, rng)?,
            config,
        })
    }

    /// Rebuilds the policy described by a checkpoint's model card. Fails
    /// if the checkpoint lacks any parameter of that architecture or a
    /// shape differs.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<(Self, ParamStore)> {
        let config: PolicyConfig = serde_json::from_value(ck.card.get("config").cloned().ok_or_else(|| Error::Structure("model card has no `config`".into()))?)?;
        let mut store = ck.restore()?;
        let saved = store.len();
        // every parameter already exists, so the rng is never drawn from
        let policy = Self::new(config, &mut store, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))?;
        if store.len() != saved {
            let missing: Vec<&str> = store.ids().skip(saved).map(|id| store.name(id)).collect();
            return Err(Error::Structure(format!("checkpoint is missing parameters: {}", missing.join(", "))));
        }
        Ok((policy, store))
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    /// Description stored in checkpoints.
    pub fn model_card(&self, store: &ParamStore) -> serde_json::Value {
        serde_json::json!({
            "model": "tpp-attention-policy",
            "config": self.config,
            "init": "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); batch norm gamma 1, beta 0",
            "gin_eps": 0.0,
            "features": {
                "coordinates": "x/1000, y/1000",
                "product": "d_k / max d",
                "edge": "p_ik / p_max, q_ik / d_k",
            },
            "batch_norm": { "eps": BN_EPS, "momentum": BN_MOMENTUM, "running_var": "unbiased" },
            "parameters": store.num_scalars(),
        })
    }

    /// Two-phase message passing: products from markets, then markets from
    /// products. Returns `(g^0, h^0)`.
    pub fn embed_inputs(&self, tape: &mut Tape, store: &ParamStore, batch: &Batch) -> Result<(Var, Var)> {
        let nodes = tape.constant(batch.node_features.clone());
        let n = batch.node_rows();
        let depots = tape.gather_rows(nodes, batch.depot_rows.clone());
        let depots = self.depot_in.forward(tape, store, depots)?;
        let depots = tape.scatter_add_rows(depots, batch.depot_rows.clone(), n);
        let h_init = if batch.market_rows.is_empty() {
            depots
        } else {
            let markets = tape.gather_rows(nodes, batch.market_rows.clone());
            let markets = self.market_in.forward(tape, store, markets)?;
            let markets = tape.scatter_add_rows(markets, batch.market_rows.clone(), n);
            tape.add(depots, markets)
        };
        let products = tape.constant(batch.product_features.clone());
        let g_init = self.product_in.forward(tape, store, products)?;
        let edges = tape.constant(batch.edge_features.clone());
        let e_init = self.edge_in.forward(tape, store, edges)?;
        let n_products = batch.product_features.rows();

        let from = tape.gather_rows(h_init, batch.edge_node.clone());
        let msg = tape.add(from, e_init);
        let msg = tape.relu(msg);
        let agg = tape.scatter_add_rows(msg, batch.edge_product.clone(), n_products);
        let g_in = tape.add(g_init, agg);
        let g0 = self.gin_product.forward(tape, store, g_in)?;

        let from = tape.gather_rows(g0, batch.edge_product.clone());
        let msg = tape.add(from, e_init);
        let msg = tape.relu(msg);
        let agg = tape.scatter_add_rows(msg, batch.edge_node.clone(), n);
        let h_in = tape.add(h_init, agg);
        let h0 = self.gin_market.forward(tape, store, h_in)?;
        Ok((g0, h0))
    }

    /// Attention layers over each instance's nodes. Returns `(h^N, h_M)`.
    pub fn encode_markets(&self, tape: &mut Tape, store: &ParamStore, batch: &Batch, h0: Var, mode: Mode) -> Result<(Var, Var)> {
        let windows = Rc::new(Windows::new(
            (0..batch.len()).flat_map(|j| std::iter::repeat_n(batch.windows[j], batch.windows[j].len)).collect(),
            None,
        ));
        let mut h = h0;
        for layer in &self.encoder {
            let a = layer.mha.forward(tape, store, h, h, windows.clone())?;
            let r = tape.add(h, a);
            let hh = layer.bn1.forward(tape, store, r, mode)?;
            let f = layer.ff.forward(tape, store, hh)?;
            let r = tape.add(hh, f);
            h = layer.bn2.forward(tape, store, r, mode)?;
        }
        let scaled = tape.scale_rows(h, batch.inv_size.clone());
        let global = tape.scatter_add_rows(scaled, batch.node_owner.clone(), batch.len());
        Ok((h, global))
    }

    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, batch: &Batch, mode: Mode) -> Result<Encoded> {
        let (g0, h0) = self.embed_inputs(tape, store, batch)?;
        let (hn, hm) = self.encode_markets(tape, store, batch, h0, mode)?;
        Ok(Encoded { products: g0, initial: h0, nodes: hn, global: hm })
    }

    /// Fresh decoder state: zero LSTM state, every instance at its depot.
    pub fn start<'b>(&self, tape: &mut Tape, store: &ParamStore, batch: &Batch<'b>, enc: &Encoded) -> Result<DecodeState<'b>> {
        let (glimpse_k, glimpse_v) = self.glimpse.keys_values(tape, store, enc.nodes)?;
        let pointer_k = self.key.forward(tape, store, enc.nodes)?;
        let zeros = Tensor::zeros(&[batch.len(), self.config.dim]);
        Ok(DecodeState {
            envs: batch.instances.iter().map(|i| EnvState::initial(i)).collect(),
            hidden: tape.constant(zeros.clone()),
            cell: tape.constant(zeros),
            glimpse_k,
            glimpse_v,
            pointer_k,
        })
    }

    /// Demand context `g_K^t` for every instance of the batch.
    pub fn demand_context(&self, tape: &mut Tape, batch: &Batch, envs: &[EnvState], g0: Var) -> Var {
        let mut w = Vec::with_capacity(batch.product_features.rows());
        for (j, env) in envs.iter().enumerate() {
            let inst = batch.instances[j];
            for (k, &left) in env.remaining_demand().iter().enumerate() {
                w.push(match self.config.demand_weights {
                    DemandWeights::Normalized => left as f64 / inst.demand(k).max(1) as f64,
                    DemandWeights::Raw => left as f64,
                });
            }
        }
        let weighted = tape.scale_rows(g0, Rc::new(w));
        tape.scatter_add_rows(weighted, batch.product_owner.clone(), batch.len())
    }

    /// Advances the route context with the last chosen node of every
    /// instance and returns the action distribution. The caller applies
    /// the chosen actions to `state.envs`.
    pub fn decode_step(&self, tape: &mut Tape, store: &ParamStore, batch: &Batch, enc: &Encoded, state: &mut DecodeState) -> Result<StepOutput> {
        let last: Vec<usize> = state.envs.iter().enumerate().map(|(j, e)| batch.node_offset[j] + e.last()).collect();
        let x = tape.gather_rows(enc.nodes, Rc::new(last));
        let (h, c) = self.lstm.forward(tape, store, x, state.hidden, state.cell)?;
        state.hidden = h;
        state.cell = c;
        let gk = self.demand_context(tape, batch, &state.envs, enc.products);
        let context = tape.concat_cols(&[enc.global, gk, h]);

        let mut mask = Vec::with_capacity(batch.node_rows());
        for env in &state.envs {
            if env.is_terminal() {
                mask.push(true);
                mask.extend(std::iter::repeat_n(false, env.instance().num_markets()));
            } else {
                mask.extend(env.action_mask()?.0);
            }
        }
        let windows = Rc::new(Windows::new(batch.windows.clone(), Some(mask)));
        let glimpsed = self.glimpse.attend(tape, store, context, state.glimpse_k, state.glimpse_v, windows.clone())?;
        let q = self.query.forward(tape, store, glimpsed)?;
        let scale = 1.0 / (self.config.key_dim() as f64).sqrt();
        let log_probs = tape.pointer_log_softmax(q, state.pointer_k, windows.clone(), self.config.clip, scale);
        Ok(StepOutput { log_probs, windows })
    }

    /// Runs the encoder once and the decoder until every instance returns
    /// to its depot.
    pub fn rollout<R: Rng + ?Sized>(&self, tape: &mut Tape, store: &ParamStore, batch: &Batch, decode: Decode, mode: Mode, rng: &mut R) -> Result<Rollout> {
        if let Decode::Forced(actions) = decode {
            if actions.len() != batch.len() {
                return Err(contract("one forced action list per instance"));
            }
        }
        let enc = self.encode(tape, store, batch, mode)?;
        let mut state = self.start(tape, store, batch, &enc)?;
        let n = batch.len();
        let mut actions = vec![Vec::new(); n];
        let mut log_probs = vec![0.0; n];
        let mut terms = Vec::new();
        while state.envs.iter().any(|e| !e.is_terminal()) {
            let out = self.decode_step(tape, store, batch, &enc, &mut state)?;
            let lp = tape.value(out.log_probs).data().to_vec();
            let (mut picked, mut owners) = (Vec::new(), Vec::new());
            for j in 0..n {
                if state.envs[j].is_terminal() {
                    continue;
                }
                let off = out.windows.offset(j);
                let slots = &lp[off..off + out.windows.window(j).len];
                let a = match decode {
                    Decode::Greedy => argmax(slots),
                    Decode::Sample => sample(slots, rng),
                    Decode::Forced(forced) => {
                        let step = actions[j].len();
                        *forced[j].get(step).ok_or_else(|| contract("forced actions end before the episode"))?
                    }
                };
                if !slots.get(a).is_some_and(|p| p.is_finite()) {
                    return Err(contract(format!("action {a} is masked")));
                }
                state.envs[j].apply(a)?;
                actions[j].push(a);
                log_probs[j] += slots[a];
                picked.push(off + a);
                owners.push(j);
            }
            let v = tape.gather_flat(out.log_probs, Rc::new(picked));
            terms.push((v, owners));
        }
        if let Decode::Forced(forced) = decode {
            if forced.iter().zip(&actions).any(|(f, a)| f.len() != a.len()) {
                return Err(contract("forced actions continue past the episode"));
            }
        }
        let solutions = state.envs.iter().map(|e| e.terminal_reward().map(|r| r.1)).collect::<Result<Vec<_>>>()?;
        Ok(Rollout { solutions, actions, log_probs, terms })
    }

    /// Inference rollout of single instances with running batch-norm
    /// statistics; returns each solution and its log-probability.
    pub fn solve_batch<R: Rng + ?Sized>(&self, store: &ParamStore, instances: &[&TppInstance], decode: Decode, rng: &mut R) -> Result<Vec<(Solution, f64)>> {
        let batch = Batch::new(instances)?;
        let mut tape = Tape::new();
        let r = self.rollout(&mut tape, store, &batch, decode, Mode::Infer, rng)?;
        Ok(r.solutions.into_iter().zip(r.log_probs).collect())
    }

    /// Greedy inference on one instance.
    pub fn greedy(&self, store: &ParamStore, inst: &TppInstance) -> Result<Solution> {
        let mut unused = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        Ok(self.solve_batch(store, &[inst], Decode::Greedy, &mut unused)?.remove(0).0)
    }
}

/// Index of the largest entry; the first on ties.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn sample<R: Rng + ?Sized>(log_probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &lp) in log_probs.iter().enumerate() {
        if lp.is_finite() {
            acc += lp.exp();
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}
