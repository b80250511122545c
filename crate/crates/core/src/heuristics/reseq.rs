use crate::error::Result;
use crate::model::{DistanceMatrix, Route, TppInstance};
use crate::oracle::{held_karp, HELD_KARP_LIMIT};

/// Reorders the visited markets: exact for up to [`HELD_KARP_LIMIT`]
/// markets, nearest neighbour plus first-improvement 2-opt beyond that. The
/// input order is kept when the result is not strictly shorter.
pub fn tsp_resequence(inst: &TppInstance, route: &Route) -> Result<Route> {
    let dist = inst.dist();
    let markets = route.markets();
    let before = route.travel_cost(dist)?;
    let order = if markets.len() <= HELD_KARP_LIMIT {
        held_karp(dist, markets)?.1
    } else {
        let mut tour = nearest_neighbour(dist, markets);
        two_opt(dist, &mut tour);
        tour[1..].to_vec()
    };
    let candidate = Route::from_markets(&order)?;
    if candidate.travel_cost(dist)? < before {
        Ok(candidate)
    } else {
        Ok(route.clone())
    }
}

/// Tour starting at the depot (`tour[0] == 0`, return edge implicit).
fn nearest_neighbour(dist: &DistanceMatrix, markets: &[usize]) -> Vec<usize> {
    let mut left = markets.to_vec();
    left.sort_unstable();
    let mut tour = vec![0];
    while !left.is_empty() {
        let last = *tour.last().unwrap();
        let (at, _) = left.iter().enumerate().min_by_key(|&(_, &j)| dist.get(last, j)).unwrap();
        tour.push(left.remove(at));
    }
    tour
}

fn closed(tour: &[usize], i: usize) -> usize {
    tour[i % tour.len()]
}

/// First-improvement 2-opt on a depot-rooted cycle until no move helps.
fn two_opt(dist: &DistanceMatrix, tour: &mut [usize]) {
    let n = tour.len();
    let mut improved = true;
    while improved {
        improved = false;
        'sweep: for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, d) = (tour[j], closed(tour, j + 1));
                let delta = dist.get(a, c) + dist.get(b, d) - dist.get(a, b) - dist.get(c, d);
                if delta < 0 {
                    tour[i + 1..=j].reverse();
                    improved = true;
                    break 'sweep;
                }
            }
        }
    }
}

/// True when no 2-opt move shortens `route`.
pub fn is_two_opt_optimal(dist: &DistanceMatrix, route: &Route) -> bool {
    let tour = &route.nodes()[..route.nodes().len() - 1];
    let n = tour.len();
    for i in 0..n - 1 {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b, c, d) = (tour[i], tour[i + 1], tour[j], closed(tour, j + 1));
            if dist.get(a, c) + dist.get(b, d) < dist.get(a, b) + dist.get(c, d) {
                return false;
            }
        }
    }
    true
}
