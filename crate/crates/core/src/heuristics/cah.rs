use super::{best_insertion, finish, SetCosts};
use crate::error::Result;
use crate::model::{Solution, TppInstance};

/// Commodity adding heuristic.
///
/// Products are taken in order of decreasing `d_k · min_i p_ik`. While the
/// current product is short, the seller minimizing insertion travel plus the
/// price of the units it would supply is spliced in at its best position.
pub fn cah(inst: &TppInstance) -> Result<Solution> {
    inst.ensure_valid()?;
    let m = inst.num_markets();
    let dist = inst.dist();
    let costs = SetCosts::new(inst);

    let mut products: Vec<usize> = (0..inst.num_products()).collect();
    let weight = |k: usize| inst.demand(k) * inst.sellers(k).iter().map(|(_, o)| o.price).min().unwrap_or(0);
    products.sort_by_key(|&k| (std::cmp::Reverse(weight(k)), k));

    let mut visited = vec![false; m + 1];
    let mut order: Vec<usize> = Vec::new();
    for k in products {
        loop {
            let supplied: i64 = inst.sellers(k).iter().filter(|(i, _)| visited[*i]).map(|(_, o)| o.quantity).sum();
            let short = inst.demand(k) - supplied;
            if short <= 0 {
                break;
            }
            let mut pick: Option<(i64, usize, usize)> = None;
            for &(i, o) in inst.sellers(k).iter().filter(|(i, _)| !visited[*i]) {
                let (delta, pos) = best_insertion(dist, &order, i);
                let score = delta + o.price * o.quantity.min(short);
                if pick.is_none_or(|(s, _, _)| score < s) {
                    pick = Some((score, i, pos));
                }
            }
            let (_, i, pos) = pick.expect("total supply covers demand");
            order.insert(pos, i);
            visited[i] = true;
        }
    }
    finish(inst, &order, costs.planner())
}
