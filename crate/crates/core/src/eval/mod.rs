//! Inference-time augmentation, named solving strategies and evaluation
//! reports.

mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use report::{read_reference_file, Report, Row};

use crate::error::{Error, Result};
use crate::heuristics::{post_optimize, Pipeline};
use crate::model::{Point, Solution, TppInstance, GRID};
use crate::nn::ParamStore;
use crate::oracle::brute_force_solve;
use crate::policy::{Decode, Policy};

pub const AUGMENTATIONS: usize = 8;

/// Symmetry `index` of the `[0, 1000]²` square applied to one point.
pub fn augment_point(p: Point, index: usize) -> Point {
    let (x, y, g) = (p.x, p.y, GRID);
    let (nx, ny) = match index {
        0 => (x, y),
        1 => (y, x),
        2 => (g - x, y),
        3 => (x, g - y),
        4 => (g - x, g - y),
        5 => (y, g - x),
        6 => (g - y, x),
        7 => (g - y, g - x),
        _ => unreachable!("augmentation index checked by caller"),
    };
    Point::new(nx, ny)
}

/// Index of the symmetry undoing `index`.
pub fn inverse_augmentation(index: usize) -> usize {
    match index {
        5 => 6,
        6 => 5,
        i => i,
    }
}

/// The instance under symmetry `index` (0 is the identity). Offers,
/// demands and node numbering are unchanged.
pub fn augment_instance(inst: &TppInstance, index: usize) -> Result<TppInstance> {
    if index >= AUGMENTATIONS {
        return Err(Error::InvalidArgument(format!("augmentation index {index} outside 0..{AUGMENTATIONS}")));
    }
    Ok(inst.map_points(|p| augment_point(p, index)))
}

/// Greedy rollouts on all eight symmetric copies, decoded as one batch;
/// the cheapest solution wins, the lowest index on ties.
pub fn solve_with_augmentation(policy: &Policy, store: &ParamStore, inst: &TppInstance) -> Result<Solution> {
    let copies = (0..AUGMENTATIONS).map(|i| augment_instance(inst, i)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&TppInstance> = copies.iter().collect();
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let sols = policy.solve_batch(store, &refs, Decode::Greedy, &mut unused)?;
    let best = sols.into_iter().map(|(s, _)| s).min_by_key(|s| s.objective).expect("eight solutions");
    // node numbering is shared, so the route and plan carry over as they are
    Solution::new(inst, best.route, best.plan)
}

/// A named way of solving an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Heuristic(Pipeline),
    /// Greedy policy decoding, optionally over the eight augmentations and
    /// optionally followed by post-optimization.
    Rl { augment: bool, post: bool },
    Oracle,
}

impl Strategy {
    pub const NAMES: [&'static str; 8] = ["gsh", "cah", "gsh+trh", "cah+trh", "rl-greedy", "rl-e2e", "rl+trh", "oracle"];

    pub fn needs_model(self) -> bool {
        matches!(self, Strategy::Rl { .. })
    }

    pub fn solve(self, inst: &TppInstance, model: Option<(&Policy, &ParamStore)>) -> Result<Solution> {
        match self {
            Strategy::Heuristic(p) => p.solve(inst),
            Strategy::Oracle => brute_force_solve(inst),
            Strategy::Rl { augment, post } => {
                let (policy, store) = model.ok_or_else(|| Error::InvalidArgument(format!("strategy {self} needs a model")))?;
                let sol = if augment { solve_with_augmentation(policy, store, inst)? } else { policy.greedy(store, inst)? };
                if post {
                    post_optimize(inst, &sol)
                } else {
                    Ok(sol)
                }
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::Heuristic(p) => p.name(),
            Strategy::Oracle => "oracle",
            Strategy::Rl { augment: false, post: false } => "rl-greedy",
            Strategy::Rl { augment: true, post: false } => "rl-e2e",
            Strategy::Rl { augment: true, post: true } => "rl+trh",
            Strategy::Rl { augment: false, post: true } => "rl-greedy+trh",
        };
        f.write_str(name)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Strategy::Oracle,
            "rl-greedy" => Strategy::Rl { augment: false, post: false },
            "rl-e2e" => Strategy::Rl { augment: true, post: false },
            "rl+trh" => Strategy::Rl { augment: true, post: true },
            "rl-greedy+trh" => Strategy::Rl { augment: false, post: true },
            other => Strategy::Heuristic(other.parse().map_err(|_| {
                Error::InvalidArgument(format!("unknown strategy `{s}`; expected one of {}", Strategy::NAMES.join(", ")))
            })?),
        })
    }
}

/// Runs `strategy` on every instance with per-instance wall-clock timing
/// of the solve call alone. `references`, when given, holds the known
/// optimum of each instance (if any) for the gap column.
pub fn evaluate(
    strategy: Strategy,
    instances: &[(String, TppInstance)],
    references: Option<&[Option<i64>]>,
    model: Option<(&Policy, &ParamStore)>,
) -> Result<Report> {
    if let Some(r) = references {
        if r.len() != instances.len() {
            return Err(Error::InvalidArgument("one reference slot per instance".into()));
        }
    }
    if strategy.needs_model() && model.is_none() {
        return Err(Error::InvalidArgument(format!("strategy {strategy} needs a model")));
    }
    let mut rows = Vec::with_capacity(instances.len());
    for (j, (name, inst)) in instances.iter().enumerate() {
        let start = Instant::now();
        let result = inst.ensure_valid().and_then(|_| strategy.solve(inst, model));
        let seconds = start.elapsed().as_secs_f64();
        let reference = references.and_then(|r| r[j]);
        rows.push(match result {
            Ok(sol) => Row {
                name: name.clone(),
                objective: Some(sol.objective),
                seconds,
                gap: reference.map(|opt| (sol.objective - opt) as f64 / opt as f64),
                error: None,
            },
            Err(e) => Row { name: name.clone(), objective: None, seconds, gap: None, error: Some(e.to_string()) },
        });
    }
    Ok(Report::new(strategy.to_string(), rows))
}
