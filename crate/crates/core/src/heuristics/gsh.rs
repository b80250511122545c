use super::{best_insertion, finish, SetCosts};
use crate::error::Result;
use crate::model::{Solution, TppInstance};

/// Generalized savings heuristic.
///
/// While the visited set cannot cover demand its purchase cost is the
/// cheapest partial coverage with every missing unit charged the instance's
/// highest price. Starting from the best single out-and-back trip, the
/// (market, position) with the largest savings (purchase decrease minus
/// travel increase) is inserted until the set is feasible and no insertion
/// saves anything.
pub fn gsh(inst: &TppInstance) -> Result<Solution> {
    inst.ensure_valid()?;
    let m = inst.num_markets();
    let dist = inst.dist();
    let penalty = inst.max_price();
    let mut costs = SetCosts::new(inst);
    let mut visited = vec![false; m + 1];

    let surrogate = |costs: &mut SetCosts, visited: &[bool]| match costs.cost(visited) {
        Some(c) => (true, c),
        None => (false, costs.planner().penalized_cost(|i| visited[i], penalty)),
    };

    let mut best = (i64::MAX, 0);
    for i in 1..=m {
        visited[i] = true;
        let (_, c) = surrogate(&mut costs, &visited);
        visited[i] = false;
        let total = 2 * dist.get(0, i) + c;
        if total < best.0 {
            best = (total, i);
        }
    }
    let mut order = vec![best.1];
    visited[best.1] = true;
    let (mut feasible, mut current) = surrogate(&mut costs, &visited);

    loop {
        let mut pick: Option<(i64, usize, usize)> = None;
        for j in 1..=m {
            if visited[j] {
                continue;
            }
            let (delta, pos) = best_insertion(dist, &order, j);
            visited[j] = true;
            let (_, c) = surrogate(&mut costs, &visited);
            visited[j] = false;
            let savings = current - c - delta;
            if pick.is_none_or(|(s, _, _)| savings > s) {
                pick = Some((savings, j, pos));
            }
        }
        let Some((savings, j, pos)) = pick else { break };
        if feasible && savings <= 0 {
            break;
        }
        order.insert(pos, j);
        visited[j] = true;
        (feasible, current) = surrogate(&mut costs, &visited);
    }
    finish(inst, &order, costs.planner())
}
