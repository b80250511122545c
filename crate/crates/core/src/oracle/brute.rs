use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, Route, Solution, TppInstance};
use crate::purchase::Planner;

/// Largest market count [`brute_force_solve`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 16;

/// Optimal closed-tour cost for every subset of markets `1..=n`.
///
/// One Held–Karp table over all markets yields the optimum of every subset
/// at once: `g[S][e]` is already the shortest depot path covering `S` and
/// ending at `e`, whatever superset is eventually completed.
pub struct SubsetTours<'a> {
    dist: &'a DistanceMatrix,
    n: usize,
    paths: Vec<i64>,
    tours: Vec<i64>,
}

impl<'a> SubsetTours<'a> {
    pub fn new(dist: &'a DistanceMatrix) -> Result<Self> {
        let n = dist.len() - 1;
        if n > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge { size: n, limit: BRUTE_FORCE_LIMIT });
        }
        let sets = 1usize << n;
        let mut g = vec![i64::MAX; sets * n.max(1)];
        for e in 0..n {
            g[(1 << e) * n + e] = dist.get(0, e + 1);
        }
        for set in 1..sets {
            for e in 0..n {
                let here = g[set * n + e];
                if here == i64::MAX {
                    continue;
                }
                let mut rest = (sets - 1) & !set;
                while rest != 0 {
                    let f = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let c = here + dist.get(e + 1, f + 1);
                    let slot = &mut g[(set | 1 << f) * n + f];
                    if c < *slot {
                        *slot = c;
                    }
                }
            }
        }
        let mut tours = vec![i64::MAX; sets];
        tours[0] = 0;
        for (set, tour) in tours.iter_mut().enumerate().skip(1) {
            for e in 0..n {
                if set & (1 << e) != 0 {
                    let c = g[set * n + e] + dist.get(e + 1, 0);
                    *tour = (*tour).min(c);
                }
            }
        }
        Ok(Self { dist, n, paths: g, tours })
    }

    /// Optimal tour cost through the markets whose bit `i - 1` is set.
    pub fn cost(&self, set: usize) -> i64 {
        self.tours[set]
    }

    /// An optimal market order for `set`.
    pub fn order(&self, set: usize) -> Vec<usize> {
        let n = self.n;
        if set == 0 {
            return Vec::new();
        }
        let target = self.tours[set];
        let mut last = (0..n)
            .find(|&e| set & (1 << e) != 0 && self.paths[set * n + e] + self.dist.get(e + 1, 0) == target)
            .unwrap();
        let mut order = Vec::new();
        let mut cur = set;
        loop {
            order.push(last + 1);
            let prev_set = cur & !(1 << last);
            if prev_set == 0 {
                break;
            }
            let want = self.paths[cur * n + last];
            last = (0..n)
                .find(|&p| {
                    prev_set & (1 << p) != 0
                        && self.paths[prev_set * n + p] != i64::MAX
                        && self.paths[prev_set * n + p] + self.dist.get(p + 1, last + 1) == want
                })
                .unwrap();
            cur = prev_set;
        }
        order.reverse();
        order
    }
}

/// Global optimum by enumerating every purchase-feasible market subset.
///
/// Ties are broken toward the lexicographically smallest visited set.
pub fn brute_force_solve(inst: &TppInstance) -> Result<Solution> {
    let n = inst.num_markets();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: BRUTE_FORCE_LIMIT });
    }
    inst.ensure_valid()?;
    let tours = SubsetTours::new(inst.dist())?;
    let planner = Planner::new(inst);
    let all = (1usize << n) - 1;
    // the full market set buys at the lowest possible cost: a lower bound for every subset
    let floor = planner.cost(|_| true)?;
    let mut best: Option<(i64, Vec<usize>, usize)> = None;
    for set in 1..=all {
        let travel = tours.cost(set);
        if let Some((b, _, _)) = &best {
            if travel + floor > *b {
                continue;
            }
        }
        let Ok(purchase) = planner.cost(|i| set & (1 << (i - 1)) != 0) else {
            continue;
        };
        let total = travel + purchase;
        let members: Vec<usize> = (1..=n).filter(|&i| set & (1 << (i - 1)) != 0).collect();
        let better = match &best {
            None => true,
            Some((b, bm, _)) => total < *b || (total == *b && members < *bm),
        };
        if better {
            best = Some((total, members, set));
        }
    }
    let (_, _, set) = best.expect("the full market set is always feasible");
    let route = Route::from_markets(&tours.order(set))?;
    let (plan, _) = planner.plan(|i| set & (1 << (i - 1)) != 0)?;
    Solution::new(inst, route, plan)
}
