//! Route construction as a deterministic, masked MDP.
//!
//! A state holds the partial route and the remaining demand `d^t`: what is
//! still missing of each product if everything the visited markets offer
//! were bought. Two masking rules keep every episode feasible: visited
//! markets cannot be chosen again, and the depot stays masked while any
//! remaining demand is positive. Choosing the depot ends the episode, at
//! which point the purchase plan is derived and the reward is the negated
//! objective. All intermediate rewards are zero.

use crate::error::{contract, Error, Result};
use crate::model::{Route, Solution, TppInstance};
use crate::purchase::Planner;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState<'a> {
    inst: &'a TppInstance,
    route: Vec<usize>,
    remaining: Vec<i64>,
    visited: Vec<bool>,
    step: usize,
    terminal: bool,
}

/// Selectable nodes: entry `i` is true when node `i` may be chosen next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionMask(pub Vec<bool>);

impl ActionMask {
    pub fn allows(&self, node: usize) -> bool {
        self.0.get(node).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn allowed(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Initial state: route `(depot)`, full demand, step 1.
pub fn reset(inst: &TppInstance) -> Result<EnvState<'_>> {
    inst.ensure_valid()?;
    Ok(EnvState::initial(inst))
}

impl<'a> EnvState<'a> {
    /// Initial state without validating the instance.
    pub fn initial(inst: &'a TppInstance) -> Self {
        let mut visited = vec![false; inst.num_markets() + 1];
        visited[0] = true;
        Self {
            inst,
            route: vec![0],
            remaining: inst.demands().to_vec(),
            visited,
            step: 1,
            terminal: false,
        }
    }

    pub fn instance(&self) -> &'a TppInstance {
        self.inst
    }

    /// Nodes chosen so far, starting with the depot. Once terminal the
    /// closing depot visit is included.
    pub fn partial_route(&self) -> &[usize] {
        &self.route
    }

    pub fn remaining_demand(&self) -> &[i64] {
        &self.remaining
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn demand_met(&self) -> bool {
        self.remaining.iter().all(|&d| d == 0)
    }

    pub fn is_visited(&self, node: usize) -> bool {
        self.visited[node]
    }

    /// Most recently added node.
    pub fn last(&self) -> usize {
        *self.route.last().unwrap()
    }

    pub fn action_mask(&self) -> Result<ActionMask> {
        if self.terminal {
            return Err(contract("action mask requested for a terminal state"));
        }
        let mut mask: Vec<bool> = self.visited.iter().map(|&v| !v).collect();
        mask[0] = self.demand_met();
        Ok(ActionMask(mask))
    }

    /// Whether `node` is selectable, without building the full mask.
    pub fn allows(&self, node: usize) -> bool {
        !self.terminal
            && node < self.visited.len()
            && if node == 0 { self.demand_met() } else { !self.visited[node] }
    }

    /// In-place transition.
    pub fn apply(&mut self, action: usize) -> Result<()> {
        if self.terminal {
            return Err(Error::IllegalAction { action, reason: "episode already ended" });
        }
        if action >= self.visited.len() {
            return Err(Error::IllegalAction { action, reason: "no such node" });
        }
        if action == 0 {
            if !self.demand_met() {
                return Err(Error::IllegalAction { action, reason: "depot masked while demand remains" });
            }
            self.route.push(0);
            self.terminal = true;
            return Ok(());
        }
        if self.visited[action] {
            return Err(Error::IllegalAction { action, reason: "market already visited" });
        }
        self.visited[action] = true;
        self.route.push(action);
        for &(k, offer) in self.inst.catalog(action) {
            self.remaining[k] = (self.remaining[k] - offer.quantity).max(0);
        }
        self.step += 1;
        Ok(())
    }

    /// Pure transition: the successor of `self` under `action`.
    pub fn step(&self, action: usize) -> Result<Self> {
        let mut next = self.clone();
        next.apply(action)?;
        Ok(next)
    }

    /// Reward `-(travel + purchase)` and the complete solution.
    pub fn terminal_reward(&self) -> Result<(i64, Solution)> {
        self.terminal_reward_with(&Planner::new(self.inst))
    }

    pub fn terminal_reward_with(&self, planner: &Planner) -> Result<(i64, Solution)> {
        if !self.terminal {
            return Err(contract("reward requested for a nonterminal state"));
        }
        let route = Route::new(self.route.clone())?;
        let (plan, _) = planner
            .plan(|i| self.visited[i])
            .map_err(|e| contract(format!("masking let an infeasible route through: {e}")))?;
        let sol = Solution::new(self.inst, route, plan)?;
        Ok((-sol.objective, sol))
    }
}
