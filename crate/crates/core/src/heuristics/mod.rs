//! Constructive baselines and post-optimization.
//!
//! [`gsh`] and [`cah`] build a route, [`trh`] drops markets that do not pay
//! for themselves, and [`tsp_resequence`] reorders the visited markets. The
//! named pipelines chain them the way the baselines are usually reported.
//!
//! Every rule breaks ties toward the lowest market index and then the lowest
//! insertion position, so all of these are pure functions of the instance.

mod cah;
mod gsh;
mod reseq;
mod trh;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

pub use cah::cah;
pub use gsh::gsh;
pub use reseq::{is_two_opt_optimal, tsp_resequence};
pub use trh::trh;

use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, Route, Solution, TppInstance};
use crate::purchase::Planner;

/// A named baseline strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pipeline {
    Gsh,
    Cah,
    GshTrh,
    CahTrh,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] = [Pipeline::Gsh, Pipeline::Cah, Pipeline::GshTrh, Pipeline::CahTrh];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Gsh => "gsh",
            Pipeline::Cah => "cah",
            Pipeline::GshTrh => "gsh+trh+reseq",
            Pipeline::CahTrh => "cah+trh+reseq",
        }
    }

    pub fn solve(self, inst: &TppInstance) -> Result<Solution> {
        match self {
            Pipeline::Gsh => gsh(inst),
            Pipeline::Cah => cah(inst),
            Pipeline::GshTrh => post_optimize(inst, &gsh(inst)?),
            Pipeline::CahTrh => post_optimize(inst, &cah(inst)?),
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gsh" => Ok(Pipeline::Gsh),
            "cah" => Ok(Pipeline::Cah),
            "gsh+trh+reseq" | "gsh+trh" => Ok(Pipeline::GshTrh),
            "cah+trh+reseq" | "cah+trh" => Ok(Pipeline::CahTrh),
            other => Err(Error::InvalidArgument(format!("unknown heuristic `{other}`"))),
        }
    }
}

/// TRH followed by re-sequencing; never worse than the input.
pub fn post_optimize(inst: &TppInstance, sol: &Solution) -> Result<Solution> {
    let reduced = trh(inst, sol)?;
    let route = tsp_resequence(inst, &reduced.route)?;
    Solution::new(inst, route, reduced.plan)
}

/// Purchase costs of visited sets, memoized for one construction run.
pub(crate) struct SetCosts {
    planner: Planner,
    words: usize,
    memo: HashMap<Vec<u64>, Option<i64>>,
}

impl SetCosts {
    pub(crate) fn new(inst: &TppInstance) -> Self {
        Self { planner: Planner::new(inst), words: inst.num_markets() / 64 + 1, memo: HashMap::new() }
    }

    pub(crate) fn planner(&self) -> &Planner {
        &self.planner
    }

    /// Exact purchase cost of `visited`, `None` when infeasible.
    pub(crate) fn cost(&mut self, visited: &[bool]) -> Option<i64> {
        let mut key = vec![0u64; self.words];
        for (i, _) in visited.iter().enumerate().filter(|(_, &v)| v) {
            key[i / 64] |= 1 << (i % 64);
        }
        let planner = &self.planner;
        *self.memo.entry(key).or_insert_with(|| planner.cost(|i| visited[i]).ok())
    }
}

/// Cheapest place to splice `node` into the cycle `0, order..., 0`:
/// `(travel increase, index in order)`.
pub(crate) fn best_insertion(dist: &DistanceMatrix, order: &[usize], node: usize) -> (i64, usize) {
    let mut best = (i64::MAX, 0);
    let mut prev = 0;
    for pos in 0..=order.len() {
        let next = order.get(pos).copied().unwrap_or(0);
        let delta = dist.get(prev, node) + dist.get(node, next) - dist.get(prev, next);
        if delta < best.0 {
            best = (delta, pos);
        }
        prev = next;
    }
    best
}

pub(crate) fn finish(inst: &TppInstance, order: &[usize], planner: &Planner) -> Result<Solution> {
    let route = Route::from_markets(order)?;
    let (plan, _) = planner.plan(|i| order.contains(&i))?;
    Solution::new(inst, route, plan)
}
