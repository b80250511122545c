//! Normalized bipartite market/product features.

use crate::model::TppInstance;

/// One offer as a market-product edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Market node index (never the depot).
    pub market: usize,
    pub product: usize,
    /// `(p_ik / p_max, q_ik / d_k)`.
    pub features: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGraph {
    /// `(x, y) / 1000` per node, depot first.
    pub nodes: Vec<[f64; 2]>,
    /// `d_k / max d` per product.
    pub products: Vec<f64>,
    /// Offers in `(market, product)` order.
    pub edges: Vec<Edge>,
}

pub const COORD_SCALE: f64 = 1000.0;

pub fn build_bipartite(inst: &TppInstance) -> BipartiteGraph {
    let nodes = (0..=inst.num_markets())
        .map(|i| {
            let p = inst.point(i);
            [p.x as f64 / COORD_SCALE, p.y as f64 / COORD_SCALE]
        })
        .collect();
    let max_d = inst.demands().iter().copied().max().unwrap_or(1).max(1) as f64;
    let products = inst.demands().iter().map(|&d| d as f64 / max_d).collect();
    let p_max = inst.max_price().max(1) as f64;
    let edges = inst
        .offers()
        .iter()
        .filter(|(&(i, k), _)| (1..=inst.num_markets()).contains(&i) && k < inst.num_products())
        .map(|(&(market, product), o)| Edge {
            market,
            product,
            features: [o.price as f64 / p_max, o.quantity as f64 / inst.demand(product).max(1) as f64],
        })
        .collect();
    BipartiteGraph { nodes, products, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, GeneratorSpec};
    use crate::model::{Offer, Point, Variant};

    #[test]
    fn features() {
        let inst = generate(&GeneratorSpec::unrestricted(12, 6, 3)).unwrap();
        let g = build_bipartite(&inst);
        assert_eq!(g.nodes.len(), 13);
        let d = inst.depot();
        assert_eq!(g.nodes[0], [d.x as f64 / 1000.0, d.y as f64 / 1000.0]);
        assert_eq!(g.edges.len(), (0..6).map(|k| inst.sellers(k).len()).sum::<usize>());
        assert!(g.edges.iter().all(|e| e.features[1] == 1.0 && e.features[0] > 0.0 && e.features[0] <= 1.0));
        assert!(g.edges.iter().all(|e| e.market != 0));
        assert!(g.products.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn centered_depot() {
        let offers = [((1, 0), Offer::new(4, 1))].into_iter().collect();
        let inst = TppInstance::new(Point::new(500, 500), vec![Point::new(0, 1000)], vec![1], offers, Variant::Unrestricted, None);
        let g = build_bipartite(&inst);
        assert_eq!(g.nodes, vec![[0.5, 0.5], [0.0, 1.0]]);
        assert_eq!(g.edges[0].features, [1.0, 1.0]);
    }

    #[test]
    fn restricted_features() {
        let inst = generate(&GeneratorSpec::restricted(10, 5, 0.9, 4)).unwrap();
        let g = build_bipartite(&inst);
        assert!(g.products.iter().all(|&d| d > 0.0 && d <= 1.0));
        assert!(g.products.iter().any(|&d| d == 1.0));
        for e in &g.edges {
            let o = inst.offer(e.market, e.product).unwrap();
            assert_eq!(e.features[1], o.quantity as f64 / inst.demand(e.product) as f64);
        }
    }
}
