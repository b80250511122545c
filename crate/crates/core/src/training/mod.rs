//! REINFORCE with a greedy-rollout baseline, first-order meta-training, and
//! fine-tuning.
//!
//! The learning loss of a solution is its objective divided by
//! [`LOSS_SCALE`]. The baseline network only changes by whole copies of the
//! policy, made when a one-sided paired t-test on a fresh evaluation set
//! says the policy is better.

mod dist;
mod ttest;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dist::Distribution;
pub use ttest::{baseline_refresh_test, paired_p_value};

use crate::error::{contract, Error, Result};
use crate::instance::generate::instance_rng;
use crate::model::TppInstance;
use crate::nn::{Adam, Checkpoint, Mode, ParamStore, Tape};
use crate::policy::{Batch, Decode, Policy, PolicyConfig};

pub const LOSS_SCALE: f64 = 1000.0;

/// Instances per forward pass when evaluating greedily.
pub const EVAL_CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub steps_per_epoch: usize,
    pub lr: f64,
    pub alpha: f64,
    /// Size of the paired evaluation set behind the baseline t-test.
    pub eval_size: usize,
    pub dist: Distribution,
    pub seed: u64,
    pub policy: PolicyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 512,
            steps_per_epoch: 2500,
            lr: 1e-4,
            alpha: 0.05,
            eval_size: 256,
            dist: Distribution::unrestricted(50, 50),
            seed: 0,
            policy: PolicyConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        self.policy.check()?;
        if self.batch_size == 0 || self.eval_size < 2 || !(self.lr > 0.0) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("batch size ≥ 1, eval size ≥ 2, lr > 0 and alpha in (0, 1) required".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetaConfig {
    pub distributions: Vec<Distribution>,
    /// Sampling weights; empty means uniform.
    pub weights: Vec<f64>,
    pub epochs: usize,
    pub outer_steps: usize,
    pub inner_steps: usize,
    pub beta: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub alpha: f64,
    pub eval_size: usize,
    pub seed: u64,
    pub policy: PolicyConfig,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            distributions: vec![Distribution::unrestricted(50, 50)],
            weights: Vec::new(),
            epochs: 100,
            outer_steps: 2500,
            inner_steps: 2,
            beta: 0.8,
            batch_size: 512,
            lr: 1e-4,
            alpha: 0.05,
            eval_size: 256,
            seed: 0,
            policy: PolicyConfig::default(),
        }
    }
}

impl MetaConfig {
    pub fn sampling_weights(&self) -> Result<Vec<f64>> {
        let n = self.distributions.len();
        if n == 0 {
            return Err(Error::InvalidArgument("meta-training needs at least one distribution".into()));
        }
        if self.weights.is_empty() {
            return Ok(vec![1.0 / n as f64; n]);
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.len() != n || self.weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("one nonnegative weight per distribution, summing to 1".into()));
        }
        Ok(self.weights.clone())
    }

    pub fn check(&self) -> Result<()> {
        self.policy.check()?;
        self.sampling_weights()?;
        if self.batch_size == 0 || self.eval_size < 2 || !(self.lr > 0.0) || !(0.0..=1.0).contains(&self.beta) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("batch size ≥ 1, eval size ≥ 2, lr > 0, beta in [0, 1], alpha in (0, 1) required".into()));
        }
        Ok(())
    }
}

/// Objectives of one policy-gradient step.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateStats {
    pub objectives: Vec<i64>,
    pub baseline_objectives: Vec<i64>,
    pub log_probs: Vec<f64>,
}

impl UpdateStats {
    pub fn mean_objective(&self) -> f64 {
        mean(&self.objectives)
    }

    pub fn mean_baseline(&self) -> f64 {
        mean(&self.baseline_objectives)
    }
}

fn mean(xs: &[i64]) -> f64 {
    xs.iter().sum::<i64>() as f64 / xs.len().max(1) as f64
}

/// One REINFORCE step: rollouts of `store` (chosen by `decode`), greedy
/// rollouts of `baseline`, then one Adam step on
/// `mean_j (L_j − b_j) · log p(π_j)` with `L = objective / 1000`.
///
/// Both rollouts normalize with batch statistics; the policy's running
/// statistics are updated afterwards.
pub fn reinforce_update<R: Rng + ?Sized>(
    policy: &Policy,
    store: &mut ParamStore,
    baseline: &ParamStore,
    instances: &[TppInstance],
    adam: &Adam,
    decode: Decode,
    rng: &mut R,
) -> Result<UpdateStats> {
    let refs: Vec<&TppInstance> = instances.iter().collect();
    let batch = Batch::new(&refs)?;
    let mut tape = Tape::new();
    let roll = policy.rollout(&mut tape, store, &batch, decode, Mode::Train, rng)?;
    let mut btape = Tape::new();
    let base = policy.rollout(&mut btape, baseline, &batch, Decode::Greedy, Mode::Train, rng)?;
    let n = instances.len() as f64;
    let weights: Vec<f64> = roll
        .solutions
        .iter()
        .zip(&base.solutions)
        .map(|(s, b)| (s.objective - b.objective) as f64 / LOSS_SCALE / n)
        .collect();
    let loss = roll.weighted_log_prob(&mut tape, &weights)?;
    store.zero_grad();
    tape.backward(loss, store)?;
    adam.step(store)?;
    store.apply_buffer_updates(tape.take_buffer_updates());
    Ok(UpdateStats { objectives: roll.objectives(), baseline_objectives: base.objectives(), log_probs: roll.log_probs })
}

/// Greedy objectives with running batch-norm statistics.
pub fn greedy_objectives(policy: &Policy, store: &ParamStore, instances: &[TppInstance]) -> Result<Vec<i64>> {
    let mut out = Vec::with_capacity(instances.len());
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    for chunk in instances.chunks(EVAL_CHUNK) {
        let refs: Vec<&TppInstance> = chunk.iter().collect();
        out.extend(policy.solve_batch(store, &refs, Decode::Greedy, &mut unused)?.into_iter().map(|(s, _)| s.objective));
    }
    Ok(out)
}

/// Outcome of an end-of-epoch baseline test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefreshRecord {
    pub eval_policy: f64,
    pub eval_baseline: f64,
    pub p_value: f64,
    pub refreshed: bool,
}

/// One metric-log line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    /// Distribution of the step's batch.
    pub dist: String,
    pub mean_sample: f64,
    pub mean_baseline: f64,
    /// Present on the last step of an epoch.
    pub refresh: Option<RefreshRecord>,
}

/// Policy, its parameters, the frozen baseline and the optimizer state.
pub struct Trainer {
    pub policy: Policy,
    pub store: ParamStore,
    pub baseline: ParamStore,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
    pub seed: u64,
}

impl Trainer {
    /// Fresh parameters drawn from `seed`; the baseline starts as a copy.
    pub fn new(config: PolicyConfig, lr: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let policy = Policy::new(config, &mut store, &mut rng)?;
        Ok(Self { policy, baseline: store.clone(), store, adam: Adam::new(lr), rng, seed })
    }

    /// Continues from existing parameters.
    pub fn from_params(policy: Policy, store: ParamStore, lr: f64, seed: u64) -> Self {
        Self { policy, baseline: store.clone(), store, adam: Adam::new(lr), rng: ChaCha8Rng::seed_from_u64(seed), seed }
    }

    fn batch(&mut self, dist: &Distribution, size: usize) -> Result<Vec<TppInstance>> {
        (0..size).map(|_| dist.sample(&mut self.rng)).collect()
    }

    /// Paired test of policy against baseline on `eval`; copies the policy
    /// into the baseline when it passes.
    pub fn refresh_baseline(&mut self, eval: &[TppInstance], alpha: f64) -> Result<RefreshRecord> {
        let p = greedy_objectives(&self.policy, &self.store, eval)?;
        let b = greedy_objectives(&self.policy, &self.baseline, eval)?;
        let scale = |xs: &[i64]| xs.iter().map(|&x| x as f64 / LOSS_SCALE).collect::<Vec<_>>();
        let p_value = paired_p_value(&scale(&p), &scale(&b))?;
        let refreshed = p_value < alpha;
        if refreshed {
            self.baseline.copy_values_from(&self.store)?;
        }
        Ok(RefreshRecord { eval_policy: mean(&p), eval_baseline: mean(&b), p_value, refreshed })
    }

    /// State saved next to the parameters in a checkpoint.
    pub fn state(&self) -> serde_json::Value {
        serde_json::json!({
            "rng": "chacha8",
            "seed": self.seed,
            "stream": self.rng.get_stream(),
            "word_pos": self.rng.get_word_pos().to_string(),
            "lr": self.adam.lr,
        })
    }

    pub fn checkpoint(&self, extra: serde_json::Value) -> Checkpoint {
        let mut state = self.state();
        state["config"] = extra;
        Checkpoint::capture(&self.store, self.policy.model_card(&self.store), state)
    }
}

/// Evaluation set of epoch `epoch`, drawn from an epoch-derived seed.
pub fn epoch_eval_set(dists: &[Distribution], weights: &[f64], size: usize, seed: u64, epoch: usize) -> Result<Vec<TppInstance>> {
    let base = seed ^ 0x5EED_0000_0000_0000 ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let pick = WeightedIndex::new(weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    (0..size)
        .map(|j| {
            let mut rng = instance_rng(base, j as u64);
            let d = dists[pick.sample(&mut rng)];
            d.sample(&mut rng)
        })
        .collect()
}

/// REINFORCE with a greedy rollout baseline, refreshed after each epoch. Calls `log` once per step.
pub fn train(config: &TrainConfig, trainer: &mut Trainer, mut log: impl FnMut(&StepRecord)) -> Result<Vec<StepRecord>> {
    config.check()?;
    trainer.adam.lr = config.lr;
    let mut records = Vec::new();
    for epoch in 0..config.epochs {
        for step in 0..config.steps_per_epoch {
            let insts = trainer.batch(&config.dist, config.batch_size)?;
            let stats = reinforce_update(&trainer.policy, &mut trainer.store, &trainer.baseline, &insts, &trainer.adam, Decode::Sample, &mut trainer.rng)?;
            let refresh = if step + 1 == config.steps_per_epoch {
                let eval = epoch_eval_set(&[config.dist], &[1.0], config.eval_size, config.seed, epoch)?;
                Some(trainer.refresh_baseline(&eval, config.alpha)?)
            } else {
                None
            };
            let rec = StepRecord {
                epoch,
                step,
                dist: config.dist.to_string(),
                mean_sample: stats.mean_objective(),
                mean_baseline: stats.mean_baseline(),
                refresh,
            };
            log(&rec);
            records.push(rec);
        }
    }
    Ok(records)
}

/// First-order meta-training with the outer move `θ ← θ + β(θ_in − θ)`.
/// Inner loops start from fresh Adam moments and share the baseline.
pub fn meta_train(config: &MetaConfig, trainer: &mut Trainer, mut log: impl FnMut(&StepRecord)) -> Result<Vec<StepRecord>> {
    config.check()?;
    let weights = config.sampling_weights()?;
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    trainer.adam.lr = config.lr;
    let mut records = Vec::new();
    for epoch in 0..config.epochs {
        for step in 0..config.outer_steps {
            let dist = config.distributions[pick.sample(&mut trainer.rng)];
            let mut inner = trainer.store.clone();
            inner.reset_optimizer();
            let (mut sampled, mut base) = (Vec::new(), Vec::new());
            for _ in 0..config.inner_steps {
                let insts = trainer.batch(&dist, config.batch_size)?;
                let stats = reinforce_update(&trainer.policy, &mut inner, &trainer.baseline, &insts, &trainer.adam, Decode::Sample, &mut trainer.rng)?;
                sampled.extend(stats.objectives);
                base.extend(stats.baseline_objectives);
            }
            trainer.store.move_toward(&inner, config.beta)?;
            let refresh = if step + 1 == config.outer_steps {
                let eval = epoch_eval_set(&config.distributions, &weights, config.eval_size, config.seed, epoch)?;
                Some(trainer.refresh_baseline(&eval, config.alpha)?)
            } else {
                None
            };
            let rec = StepRecord { epoch, step, dist: dist.to_string(), mean_sample: mean(&sampled), mean_baseline: mean(&base), refresh };
            log(&rec);
            records.push(rec);
        }
    }
    Ok(records)
}

/// `steps` REINFORCE updates from `meta` on batches of `dist`, with the
/// baseline fixed at `meta` and fresh Adam moments. Returns `θ_in^N`.
pub fn fine_tune(policy: &Policy, meta: &ParamStore, dist: &Distribution, steps: usize, batch_size: usize, lr: f64, seed: u64) -> Result<ParamStore> {
    if batch_size == 0 {
        return Err(contract("fine-tuning needs a nonempty batch"));
    }
    let mut store = meta.clone();
    store.reset_optimizer();
    let adam = Adam::new(lr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..steps {
        let insts: Vec<TppInstance> = (0..batch_size).map(|_| dist.sample(&mut rng)).collect::<Result<_>>()?;
        reinforce_update(policy, &mut store, meta, &insts, &adam, Decode::Sample, &mut rng)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests;
