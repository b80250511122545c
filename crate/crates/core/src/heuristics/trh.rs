use super::{finish, SetCosts};
use crate::error::Result;
use crate::model::{Solution, TppInstance};

/// Tour reduction: repeatedly drop the market whose removal keeps the
/// purchase feasible and saves the most (travel saved minus extra purchase
/// cost), while that saving is positive. The visit order is kept.
pub fn trh(inst: &TppInstance, sol: &Solution) -> Result<Solution> {
    sol.check(inst)?;
    let dist = inst.dist();
    let mut costs = SetCosts::new(inst);
    let mut order = sol.route.markets().to_vec();
    let mut visited = vec![false; inst.num_markets() + 1];
    for &i in &order {
        visited[i] = true;
    }
    let mut current = costs.cost(&visited).expect("feasible input");

    while order.len() > 1 {
        let mut pick: Option<(i64, usize, usize, i64)> = None;
        for (pos, &j) in order.iter().enumerate() {
            let prev = if pos == 0 { 0 } else { order[pos - 1] };
            let next = order.get(pos + 1).copied().unwrap_or(0);
            let saved = dist.get(prev, j) + dist.get(j, next) - dist.get(prev, next);
            visited[j] = false;
            let after = costs.cost(&visited);
            visited[j] = true;
            let Some(after) = after else { continue };
            let gain = saved - (after - current);
            let better = match pick {
                None => true,
                Some((g, _, m, _)) => gain > g || (gain == g && j < m),
            };
            if better {
                pick = Some((gain, pos, j, after));
            }
        }
        match pick {
            Some((gain, pos, j, after)) if gain > 0 => {
                order.remove(pos);
                visited[j] = false;
                current = after;
            }
            _ => break,
        }
    }
    finish(inst, &order, costs.planner())
}
