//! Stage-two purchase planning.
//!
//! Once the set of visited markets is fixed, the purchase problem is a
//! transportation problem whose only constraints are, per product, the demand
//! equality and the per-offer supply bounds. No constraint couples two
//! products, so the LP splits into `|K|` independent continuous knapsacks
//! with unit weights. Each one is solved exactly by filling the demand from
//! the cheapest visited offers first. Integral demands and supplies keep the
//! greedy solution integral.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{PurchasePlan, TppInstance};

/// Per-product offers pre-sorted by (price, market index) for repeated
/// planning over many visited sets of one instance.
#[derive(Clone, Debug)]
pub struct Planner {
    sorted: Vec<Vec<(usize, i64, i64)>>,
    demands: Vec<i64>,
}

impl Planner {
    pub fn new(inst: &TppInstance) -> Self {
        let sorted = (0..inst.num_products())
            .map(|k| {
                let mut v: Vec<_> = inst.sellers(k).iter().map(|&(i, o)| (i, o.price, o.quantity)).collect();
                v.sort_by_key(|&(i, p, _)| (p, i));
                v
            })
            .collect();
        Self { sorted, demands: inst.demands().to_vec() }
    }

    /// Minimum purchase cost when buying only at markets where `visited` is
    /// true, or the first product whose demand cannot be met.
    pub fn cost(&self, visited: impl Fn(usize) -> bool) -> Result<i64> {
        let mut total = 0;
        for (k, offers) in self.sorted.iter().enumerate() {
            let mut need = self.demands[k];
            for &(i, p, q) in offers {
                if need == 0 {
                    break;
                }
                if visited(i) {
                    let take = need.min(q);
                    total += take * p;
                    need -= take;
                }
            }
            if need > 0 {
                let supply = offers.iter().filter(|o| visited(o.0)).map(|o| o.2).sum();
                return Err(Error::InfeasibleRoute { product: k, supply, demand: self.demands[k] });
            }
        }
        Ok(total)
    }

    /// Cheapest partial coverage from `visited`, with every unit that cannot
    /// be bought there charged `penalty`. Equals [`cost`](Self::cost) on
    /// feasible sets.
    pub fn penalized_cost(&self, visited: impl Fn(usize) -> bool, penalty: i64) -> i64 {
        let mut total = 0;
        for (k, offers) in self.sorted.iter().enumerate() {
            let mut need = self.demands[k];
            for &(i, p, q) in offers {
                if need == 0 {
                    break;
                }
                if visited(i) {
                    let take = need.min(q);
                    total += take * p;
                    need -= take;
                }
            }
            total += need * penalty;
        }
        total
    }

    /// Like [`cost`](Self::cost) but also returns the plan.
    pub fn plan(&self, visited: impl Fn(usize) -> bool) -> Result<(PurchasePlan, i64)> {
        let mut plan = PurchasePlan::new();
        let mut total = 0;
        for (k, offers) in self.sorted.iter().enumerate() {
            let mut need = self.demands[k];
            for &(i, p, q) in offers {
                if need == 0 {
                    break;
                }
                if visited(i) {
                    let take = need.min(q);
                    plan.add(i, k, take);
                    total += take * p;
                    need -= take;
                }
            }
            if need > 0 {
                let supply = offers.iter().filter(|o| visited(o.0)).map(|o| o.2).sum();
                return Err(Error::InfeasibleRoute { product: k, supply, demand: self.demands[k] });
            }
        }
        Ok((plan, total))
    }
}

/// Cheapest plan buying only at `visited` markets, with its cost.
pub fn optimal_purchase(inst: &TppInstance, visited: &BTreeSet<usize>) -> Result<(PurchasePlan, i64)> {
    if visited.is_empty() {
        return Err(Error::InvalidArgument("visited market set is empty".into()));
    }
    Planner::new(inst).plan(|i| visited.contains(&i))
}

/// `Σ p_ik z_ik` over the plan.
pub fn plan_cost(plan: &PurchasePlan, inst: &TppInstance) -> Result<i64> {
    plan.iter().try_fold(0, |acc, ((i, k), z)| {
        let offer = inst.offer(i, k).ok_or(Error::UnknownOffer { market: i, product: k })?;
        Ok(acc + offer.price * z)
    })
}
