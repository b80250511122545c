use std::collections::BTreeMap;

use super::*;
use crate::instance::{generate, GeneratorSpec};
use crate::model::{Offer, Point, Variant};
use crate::nn::gradcheck::check_params;

fn tiny_policy() -> PolicyConfig {
    PolicyConfig { dim: 8, layers: 1, heads: 2, ff_hidden: 16, ..PolicyConfig::default() }
}

fn tiny_train() -> TrainConfig {
    TrainConfig {
        epochs: 1,
        batch_size: 4,
        steps_per_epoch: 2,
        lr: 1e-3,
        eval_size: 8,
        dist: Distribution::unrestricted(5, 3),
        seed: 1,
        policy: tiny_policy(),
        ..TrainConfig::default()
    }
}

#[test]
fn self_baseline_gives_zero_step() {
    let mut t = Trainer::new(tiny_policy(), 1e-2, 3).unwrap();
    let insts: Vec<TppInstance> = (0..4).map(|s| generate(&GeneratorSpec::unrestricted(6, 4, s)).unwrap()).collect();
    let before = t.store.clone();
    let stats = reinforce_update(&t.policy, &mut t.store, &t.baseline, &insts, &t.adam, Decode::Greedy, &mut t.rng).unwrap();
    assert_eq!(stats.objectives, stats.baseline_objectives);
    for id in before.ids() {
        assert_eq!(t.store.value(id), before.value(id));
    }
}

#[test]
fn better_sample_becomes_more_likely() {
    let inst = generate(&GeneratorSpec::unrestricted(8, 5, 21)).unwrap();
    let insts = vec![inst.clone()];
    let mut t = Trainer::new(tiny_policy(), 1e-3, 5).unwrap();
    let batch = Batch::new(&[&inst]).unwrap();
    let log_p = |store: &ParamStore, actions: &[Vec<usize>]| {
        let mut tape = Tape::new();
        let r = t.policy.rollout(&mut tape, store, &batch, Decode::Forced(actions), Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        r.log_probs[0]
    };
    let greedy = {
        let mut tape = Tape::new();
        t.policy.rollout(&mut tape, &t.baseline, &batch, Decode::Greedy, Mode::Train, &mut t.rng).unwrap()
    };
    let (mut better, mut worse) = (None, None);
    for _ in 0..200 {
        let mut tape = Tape::new();
        let r = t.policy.rollout(&mut tape, &t.store, &batch, Decode::Sample, Mode::Train, &mut t.rng).unwrap();
        if r.solutions[0].objective < greedy.solutions[0].objective {
            better.get_or_insert(r.actions.clone());
        } else if r.solutions[0].objective > greedy.solutions[0].objective {
            worse.get_or_insert(r.actions.clone());
        }
    }
    let better = better.expect("some sample beats greedy");
    let worse = worse.expect("some sample loses to greedy");
    for (actions, up) in [(better, true), (worse, false)] {
        let mut store = t.store.clone();
        let before = log_p(&store, &actions);
        reinforce_update(&t.policy, &mut store, &t.baseline, &insts, &t.adam, Decode::Forced(&actions), &mut t.rng).unwrap();
        let after = log_p(&store, &actions);
        assert_eq!(after > before, up, "{before} -> {after}");
    }
}

#[test]
fn advantage_weighted_gradient_two_markets() {
    let offers: BTreeMap<_, _> = [((1, 0), Offer::new(3, 1)), ((2, 0), Offer::new(1, 1)), ((2, 1), Offer::new(5, 1))].into_iter().collect();
    let inst = TppInstance::new(Point::new(100, 900), vec![Point::new(400, 200), Point::new(800, 700)], vec![1, 1], offers, Variant::Unrestricted, None);
    let mut t = Trainer::new(tiny_policy(), 1e-3, 8).unwrap();
    let batch = Batch::new(&[&inst, &inst]).unwrap();
    let actions = vec![vec![1, 2, 0], vec![2, 0]];
    let policy = &t.policy;
    let report = check_params(&mut t.store, 1e-5, |s, tape| {
        let r = policy.rollout(tape, s, &batch, Decode::Forced(&actions), Mode::Train, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        // advantages of the two trajectories against a baseline of 1.2
        let adv = [r.solutions[0].objective as f64 / LOSS_SCALE - 1.2, r.solutions[1].objective as f64 / LOSS_SCALE - 1.2];
        r.weighted_log_prob(tape, &adv).unwrap()
    });
    assert!(report.max_rel_error <= 1e-4, "{report:?}");
}

#[test]
fn smoke_run_logs_each_step() {
    let config = tiny_train();
    let mut t = Trainer::new(config.policy.clone(), config.lr, config.seed).unwrap();
    let mut lines = Vec::new();
    let records = train(&config, &mut t, |r| lines.push(serde_json::to_string(r).unwrap())).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(lines.len(), 2);
    assert!(records[0].refresh.is_none());
    assert!(records[1].refresh.is_some());
    let back: StepRecord = serde_json::from_str(&lines[1]).unwrap();
    assert_eq!(back, records[1]);
}

#[test]
fn training_is_reproducible() {
    let config = TrainConfig { steps_per_epoch: 3, epochs: 2, ..tiny_train() };
    let run = || {
        let mut t = Trainer::new(config.policy.clone(), config.lr, config.seed).unwrap();
        let r = train(&config, &mut t, |_| {}).unwrap();
        (r, t.store, t.baseline)
    };
    let (a, b) = (run(), run());
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
}

#[test]
fn baseline_changes_only_by_copy() {
    let config = TrainConfig { steps_per_epoch: 2, epochs: 3, ..tiny_train() };
    let mut t = Trainer::new(config.policy.clone(), config.lr, config.seed).unwrap();
    let mut snapshots = vec![t.baseline.clone()];
    let mut policies = vec![];
    let mut cfg1 = config.clone();
    cfg1.epochs = 1;
    for e in 0..3 {
        cfg1.seed = config.seed;
        let recs = train(&cfg1, &mut t, |_| {}).unwrap();
        let refreshed = recs.last().unwrap().refresh.as_ref().unwrap().refreshed;
        policies.push(t.store.clone());
        if refreshed {
            assert_eq!(t.baseline.max_abs_diff(&t.store).unwrap(), 0.0, "epoch {e}");
        } else {
            assert_eq!(&t.baseline, snapshots.last().unwrap());
        }
        snapshots.push(t.baseline.clone());
    }
}

fn tiny_meta(beta: f64) -> MetaConfig {
    MetaConfig {
        distributions: vec![Distribution::unrestricted(4, 2), Distribution::unrestricted(6, 3)],
        epochs: 1,
        outer_steps: 2,
        inner_steps: 2,
        beta,
        batch_size: 3,
        lr: 1e-2,
        eval_size: 4,
        seed: 2,
        policy: tiny_policy(),
        ..MetaConfig::default()
    }
}

#[test]
fn meta_beta_zero_keeps_parameters() {
    let config = tiny_meta(0.0);
    let mut t = Trainer::new(config.policy.clone(), config.lr, 4).unwrap();
    let before = t.store.clone();
    let recs = meta_train(&config, &mut t, |_| {}).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(t.store.max_abs_diff(&before).unwrap(), 0.0);
}

#[test]
fn meta_beta_one_lands_on_inner_parameters() {
    let config = MetaConfig { outer_steps: 1, ..tiny_meta(1.0) };
    let mut t = Trainer::new(config.policy.clone(), config.lr, 4).unwrap();
    // replay the single outer step by hand with the same random stream
    let mut rng = t.rng.clone();
    let pick = WeightedIndex::new([0.5, 0.5]).unwrap();
    let dist = config.distributions[pick.sample(&mut rng)];
    let mut inner = t.store.clone();
    inner.reset_optimizer();
    for _ in 0..config.inner_steps {
        let insts: Vec<TppInstance> = (0..config.batch_size).map(|_| dist.sample(&mut rng).unwrap()).collect();
        reinforce_update(&t.policy, &mut inner, &t.baseline, &insts, &Adam::new(config.lr), Decode::Sample, &mut rng).unwrap();
    }
    meta_train(&config, &mut t, |_| {}).unwrap();
    assert_eq!(t.store.max_abs_diff(&inner).unwrap(), 0.0);
    assert!(inner.max_abs_diff(&t.baseline).unwrap() > 0.0 || t.baseline.max_abs_diff(&t.store).unwrap() == 0.0);
}

#[test]
fn fine_tune_steps() {
    let t = Trainer::new(tiny_policy(), 1e-3, 6).unwrap();
    let dist = Distribution::unrestricted(5, 4);
    let same = fine_tune(&t.policy, &t.store, &dist, 0, 4, 1e-3, 0).unwrap();
    assert_eq!(same.max_abs_diff(&t.store).unwrap(), 0.0);
    let moved = fine_tune(&t.policy, &t.store, &dist, 2, 8, 1e-3, 0).unwrap();
    assert!(moved.max_abs_diff(&t.store).unwrap() > 0.0);
}

#[test]
fn configs_round_trip_and_validate() {
    let c = TrainConfig::default();
    assert_eq!((c.epochs, c.batch_size, c.steps_per_epoch, c.lr, c.alpha), (100, 512, 2500, 1e-4, 0.05));
    let m = MetaConfig::default();
    assert_eq!((m.outer_steps, m.inner_steps, m.beta), (2500, 2, 0.8));
    let json = serde_json::to_string(&tiny_meta(0.5)).unwrap();
    assert_eq!(serde_json::from_str::<MetaConfig>(&json).unwrap(), tiny_meta(0.5));
    assert_eq!(tiny_meta(0.5).sampling_weights().unwrap(), vec![0.5, 0.5]);
    let bad = MetaConfig { weights: vec![0.7, 0.7], ..tiny_meta(0.5) };
    assert!(bad.check().is_err());
    let bad = MetaConfig { distributions: vec![], ..tiny_meta(0.5) };
    assert!(bad.check().is_err());
    assert!(TrainConfig { alpha: 1.5, ..tiny_train() }.check().is_err());
}

#[test]
fn eval_sets_depend_on_epoch_only() {
    let d = [Distribution::unrestricted(5, 3)];
    let a = epoch_eval_set(&d, &[1.0], 4, 7, 0).unwrap();
    assert_eq!(a, epoch_eval_set(&d, &[1.0], 4, 7, 0).unwrap());
    assert_ne!(a, epoch_eval_set(&d, &[1.0], 4, 7, 1).unwrap());
}
