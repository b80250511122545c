use crate::error::{Error, Result};
use crate::model::DistanceMatrix;

/// Largest market count [`held_karp`] accepts.
pub const HELD_KARP_LIMIT: usize = 13;

/// Shortest closed tour from the depot through every node in `nodes`.
///
/// Returns the tour cost and the visiting order (depot excluded). `g[S][e]`
/// is the cheapest depot-to-`e` path covering exactly the set `S`; the tour
/// closes with the cheapest `g[all][e] + c(e, 0)`.
pub fn held_karp(dist: &DistanceMatrix, nodes: &[usize]) -> Result<(i64, Vec<usize>)> {
    let n = nodes.len();
    if n > HELD_KARP_LIMIT {
        return Err(Error::TooLarge { size: n, limit: HELD_KARP_LIMIT });
    }
    if let Some(&bad) = nodes.iter().find(|&&v| v == 0 || v >= dist.len()) {
        return Err(Error::InvalidArgument(format!("node {bad} is not a market of the matrix")));
    }
    match n {
        0 => return Ok((0, Vec::new())),
        1 => return Ok((2 * dist.get(0, nodes[0]), nodes.to_vec())),
        _ => {}
    }
    let full = (1usize << n) - 1;
    let mut g = vec![i64::MAX; (full + 1) * n];
    for e in 0..n {
        g[(1 << e) * n + e] = dist.get(0, nodes[e]);
    }
    for set in 1..=full {
        for e in 0..n {
            let here = g[set * n + e];
            if set & (1 << e) == 0 || here == i64::MAX {
                continue;
            }
            let mut rest = full & !set;
            while rest != 0 {
                let f = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let next = set | (1 << f);
                let c = here + dist.get(nodes[e], nodes[f]);
                if c < g[next * n + f] {
                    g[next * n + f] = c;
                }
            }
        }
    }
    let (mut last, mut best) = (0, i64::MAX);
    for e in 0..n {
        let c = g[full * n + e] + dist.get(nodes[e], 0);
        if c < best {
            best = c;
            last = e;
        }
    }
    // walk back through the table
    let mut order = Vec::with_capacity(n);
    let mut set = full;
    loop {
        order.push(nodes[last]);
        let prev_set = set & !(1 << last);
        if prev_set == 0 {
            break;
        }
        let target = g[set * n + last];
        let prev = (0..n)
            .find(|&p| {
                prev_set & (1 << p) != 0
                    && g[prev_set * n + p] != i64::MAX
                    && g[prev_set * n + p] + dist.get(nodes[p], nodes[last]) == target
            })
            .expect("consistent table");
        set = prev_set;
        last = prev;
    }
    order.reverse();
    Ok((best, order))
}
