//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use tpp::instance::{generate, GeneratorSpec};
use tpp::TppInstance;

/// Minimum purchase cost for the markets in `visited`, solved as one
/// min-cost flow over the whole instance: source → offer arc (capacity
/// `q`, cost `p`) → product → sink (capacity `d`). Successive shortest
/// paths with Bellman–Ford. `None` when the demand cannot be met.
pub fn min_cost_flow_purchase(inst: &TppInstance, visited: &BTreeSet<usize>) -> Option<i64> {
    let m = inst.num_markets();
    let k = inst.num_products();
    // nodes: 0 source, 1..=m markets, m+1..=m+k products, m+k+1 sink
    let (source, sink) = (0, m + k + 1);
    let mut g = Graph::new(m + k + 2);
    for &i in visited {
        let supply: i64 = (0..k).filter_map(|p| inst.offer(i, p)).map(|o| o.quantity).sum();
        g.edge(source, i, supply, 0);
    }
    for (&(i, p), o) in inst.offers() {
        if visited.contains(&i) {
            g.edge(i, m + 1 + p, o.quantity, o.price);
        }
    }
    let demand: i64 = inst.demands().iter().sum();
    for (p, &d) in inst.demands().iter().enumerate() {
        g.edge(m + 1 + p, sink, d, 0);
    }
    let (flow, cost) = g.min_cost_flow(source, sink);
    (flow == demand).then_some(cost)
}

struct Graph {
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Self { to: vec![], cap: vec![], cost: vec![], adj: vec![vec![]; n] }
    }

    fn edge(&mut self, a: usize, b: usize, cap: i64, cost: i64) {
        self.adj[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(0);
        self.cost.push(-cost);
    }

    fn min_cost_flow(&mut self, s: usize, t: usize) -> (i64, i64) {
        let n = self.adj.len();
        let (mut flow, mut total) = (0, 0);
        loop {
            let mut dist = vec![i64::MAX; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == i64::MAX {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let v = self.to[e];
                        if self.cap[e] > 0 && dist[u] + self.cost[e] < dist[v] {
                            dist[v] = dist[u] + self.cost[e];
                            via[v] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == i64::MAX {
                return (flow, total);
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                let e = via[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            flow += push;
            total += push * dist[t];
        }
    }
}

/// A random generator spec: either variant, `λ ∈ {0.9, 0.95, 0.99}`.
pub fn random_spec<R: Rng>(rng: &mut R, markets: std::ops::RangeInclusive<usize>, products: std::ops::RangeInclusive<usize>) -> GeneratorSpec {
    let m = rng.random_range(markets);
    let k = rng.random_range(products);
    let seed = rng.random();
    if rng.random_bool(0.5) {
        GeneratorSpec::unrestricted(m, k, seed)
    } else {
        let lambda = [0.9, 0.95, 0.99][rng.random_range(0..3)];
        GeneratorSpec::restricted(m, k, lambda, seed)
    }
}

pub fn random_instance<R: Rng>(rng: &mut R, markets: std::ops::RangeInclusive<usize>, products: std::ops::RangeInclusive<usize>) -> TppInstance {
    generate(&random_spec(rng, markets, products)).expect("generator")
}

/// Random nonempty subset of the markets.
pub fn random_subset<R: Rng>(rng: &mut R, inst: &TppInstance) -> BTreeSet<usize> {
    let m = inst.num_markets();
    loop {
        let s: BTreeSet<usize> = (1..=m).filter(|_| rng.random_bool(0.6)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}
