//! Problem data: instances, routes, purchase plans and solutions.
//!
//! Node indices are shared by every node-indexed structure in the crate: the
//! depot is node `0` and market `i` is node `i` for `i` in `1..=num_markets`.
//! Products are indexed `0..num_products`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the coordinate square instances live in.
pub const GRID: i64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

/// How Euclidean distances are turned into integer travel costs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rounding {
    /// `floor(sqrt(dx² + dy²))`.
    #[default]
    Floor,
    /// Nearest integer, half rounded up (TSPLIB `EUC_2D`).
    Nearest,
}

/// Integer distance between two grid points under the given rounding.
pub fn rounded_distance(a: Point, b: Point, rounding: Rounding) -> i64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let sq = dx * dx + dy * dy;
    match rounding {
        Rounding::Floor => isqrt(sq),
        Rounding::Nearest => {
            // round(sqrt(s)) = r iff (r - 1/2)² <= s < (r + 1/2)², i.e. 4s >= (2r - 1)²
            let r = isqrt(sq);
            if 4 * sq >= (2 * r + 1) * (2 * r + 1) {
                r + 1
            } else {
                r
            }
        }
    }
}

/// Floor of the Euclidean distance between two integer points.
pub fn truncated_distance(a: Point, b: Point) -> i64 {
    rounded_distance(a, b, Rounding::Floor)
}

fn isqrt(n: i64) -> i64 {
    debug_assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Supply of one product at one market: unit price and available units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offer {
    pub price: i64,
    pub quantity: i64,
}

impl Offer {
    pub const fn new(price: i64, quantity: i64) -> Self {
        Self { price, quantity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Every offer covers the full demand (`q_ik = d_k`).
    Unrestricted,
    /// Offers carry a finite supply `0 < q_ik <= d_k`.
    Restricted,
}

impl Variant {
    pub fn code(self) -> char {
        match self {
            Variant::Unrestricted => 'U',
            Variant::Restricted => 'R',
        }
    }
}

/// Symmetric integer travel-cost matrix over nodes `0..=num_markets`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    cost: Vec<i64>,
}

impl DistanceMatrix {
    pub fn from_points(points: &[Point], rounding: Rounding) -> Self {
        let n = points.len();
        let mut cost = vec![0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = rounded_distance(points[i], points[j], rounding);
                cost[i * n + j] = c;
                cost[j * n + i] = c;
            }
        }
        Self { n, cost }
    }

    /// Builds a matrix from explicit rows; used by tests and small fixtures.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        let mut cost = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Structure(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            cost.extend_from_slice(row);
        }
        let m = Self { n, cost };
        for i in 0..n {
            if m.get(i, i) != 0 {
                return Err(Error::Structure(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                if m.get(i, j) != m.get(j, i) || m.get(i, j) < 0 {
                    return Err(Error::Structure(format!("entry ({i},{j}) breaks symmetry or sign")));
                }
            }
        }
        Ok(m)
    }

    /// Number of nodes, depot included.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.cost[i * self.n + j]
    }
}

/// A traveling purchaser instance.
///
/// Construct through [`TppInstance::new`], which builds the per-product and
/// per-market offer indexes and the distance matrix. Construction does not
/// validate; call [`TppInstance::validate`] for that.
#[derive(Clone, Debug, PartialEq)]
pub struct TppInstance {
    depot: Point,
    markets: Vec<Point>,
    demands: Vec<i64>,
    offers: BTreeMap<(usize, usize), Offer>,
    variant: Variant,
    lambda: Option<f64>,
    rounding: Rounding,
    by_product: Vec<Vec<(usize, Offer)>>,
    by_market: Vec<Vec<(usize, Offer)>>,
    dist: DistanceMatrix,
}

impl TppInstance {
    /// `offers` is keyed by `(market node index, product index)`. Offers
    /// referencing nodes or products out of range are kept so that
    /// validation can report them, but are left out of the indexes.
    pub fn new(
        depot: Point,
        markets: Vec<Point>,
        demands: Vec<i64>,
        offers: BTreeMap<(usize, usize), Offer>,
        variant: Variant,
        lambda: Option<f64>,
    ) -> Self {
        Self::with_rounding(depot, markets, demands, offers, variant, lambda, Rounding::Floor)
    }

    pub fn with_rounding(
        depot: Point,
        markets: Vec<Point>,
        demands: Vec<i64>,
        offers: BTreeMap<(usize, usize), Offer>,
        variant: Variant,
        lambda: Option<f64>,
        rounding: Rounding,
    ) -> Self {
        let m = markets.len();
        let k = demands.len();
        let mut by_product = vec![Vec::new(); k];
        let mut by_market = vec![Vec::new(); m + 1];
        for (&(i, p), &o) in &offers {
            if (1..=m).contains(&i) && p < k {
                by_product[p].push((i, o));
                by_market[i].push((p, o));
            }
        }
        let mut points = Vec::with_capacity(m + 1);
        points.push(depot);
        points.extend_from_slice(&markets);
        let dist = DistanceMatrix::from_points(&points, rounding);
        Self {
            depot,
            markets,
            demands,
            offers,
            variant,
            lambda,
            rounding,
            by_product,
            by_market,
            dist,
        }
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    /// Market coordinates; market node `i` is `markets()[i - 1]`.
    pub fn markets(&self) -> &[Point] {
        &self.markets
    }

    /// Coordinates of node `i` (depot for `0`).
    pub fn point(&self, node: usize) -> Point {
        if node == 0 {
            self.depot
        } else {
            self.markets[node - 1]
        }
    }

    pub fn num_markets(&self) -> usize {
        self.markets.len()
    }

    pub fn num_products(&self) -> usize {
        self.demands.len()
    }

    pub fn demands(&self) -> &[i64] {
        &self.demands
    }

    pub fn demand(&self, product: usize) -> i64 {
        self.demands[product]
    }

    pub fn offers(&self) -> &BTreeMap<(usize, usize), Offer> {
        &self.offers
    }

    pub fn offer(&self, market: usize, product: usize) -> Option<Offer> {
        self.offers.get(&(market, product)).copied()
    }

    /// Markets selling `product`, ascending by market index.
    pub fn sellers(&self, product: usize) -> &[(usize, Offer)] {
        &self.by_product[product]
    }

    /// Products sold at `market`, ascending by product index.
    pub fn catalog(&self, market: usize) -> &[(usize, Offer)] {
        &self.by_market[market]
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn dist(&self) -> &DistanceMatrix {
        &self.dist
    }

    pub fn max_price(&self) -> i64 {
        self.offers.values().map(|o| o.price).max().unwrap_or(1)
    }

    /// Same instance with every node moved by `f`; offers and demands unchanged.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        Self::with_rounding(
            f(self.depot),
            self.markets.iter().map(|&p| f(p)).collect(),
            self.demands.clone(),
            self.offers.clone(),
            self.variant,
            self.lambda,
            self.rounding,
        )
    }

    /// Checks every instance invariant and lists the violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.num_markets();
        let k = self.num_products();
        for (node, p) in std::iter::once(self.depot).chain(self.markets.iter().copied()).enumerate() {
            if !(0..=GRID).contains(&p.x) || !(0..=GRID).contains(&p.y) {
                out.push(Violation::CoordinateOutOfRange { node });
            }
        }
        if m == 0 {
            out.push(Violation::NoMarkets);
        }
        if k == 0 {
            out.push(Violation::NoProducts);
        }
        match (self.variant, self.lambda) {
            (Variant::Unrestricted, Some(_)) => out.push(Violation::LambdaOnUnrestricted),
            (Variant::Restricted, Some(l)) if !(l > 0.0 && l < 1.0) => {
                out.push(Violation::LambdaOutOfRange { lambda: l })
            }
            _ => {}
        }
        for (product, &d) in self.demands.iter().enumerate() {
            if d < 1 {
                out.push(Violation::DemandNotPositive { product, demand: d });
            }
        }
        for (&(market, product), o) in &self.offers {
            if !(1..=m).contains(&market) || product >= k {
                out.push(Violation::OfferOutOfRange { market, product });
                continue;
            }
            if o.price < 1 {
                out.push(Violation::PriceNotPositive { market, product, price: o.price });
            }
            if o.quantity < 1 {
                out.push(Violation::QuantityNotPositive { market, product, quantity: o.quantity });
            }
            let d = self.demands[product];
            match self.variant {
                Variant::Unrestricted if o.quantity != d => {
                    out.push(Violation::UnrestrictedQuantity { market, product, quantity: o.quantity, demand: d })
                }
                Variant::Restricted if o.quantity > d => {
                    out.push(Violation::QuantityExceedsDemand { market, product, quantity: o.quantity, demand: d })
                }
                _ => {}
            }
        }
        for product in 0..k {
            let sellers = self.sellers(product);
            if sellers.is_empty() {
                out.push(Violation::ProductUnoffered { product });
                continue;
            }
            let supply: i64 = sellers.iter().map(|(_, o)| o.quantity).sum();
            if supply < self.demands[product] {
                out.push(Violation::InsufficientSupply { product, supply, demand: self.demands[product] });
            }
        }
        out
    }

    /// `Ok(())` when [`validate`](Self::validate) finds nothing.
    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }
}

/// One broken instance invariant, located by market node and/or product.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoMarkets,
    NoProducts,
    CoordinateOutOfRange { node: usize },
    LambdaOnUnrestricted,
    LambdaOutOfRange { lambda: f64 },
    DemandNotPositive { product: usize, demand: i64 },
    OfferOutOfRange { market: usize, product: usize },
    PriceNotPositive { market: usize, product: usize, price: i64 },
    QuantityNotPositive { market: usize, product: usize, quantity: i64 },
    UnrestrictedQuantity { market: usize, product: usize, quantity: i64, demand: i64 },
    QuantityExceedsDemand { market: usize, product: usize, quantity: i64, demand: i64 },
    ProductUnoffered { product: usize },
    InsufficientSupply { product: usize, supply: i64, demand: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match *self {
            NoMarkets => write!(f, "instance has no markets"),
            NoProducts => write!(f, "instance has no products"),
            CoordinateOutOfRange { node } => write!(f, "node {node} lies outside the [0, {GRID}] square"),
            LambdaOnUnrestricted => write!(f, "unrestricted instance carries a lambda"),
            LambdaOutOfRange { lambda } => write!(f, "lambda {lambda} outside (0, 1)"),
            DemandNotPositive { product, demand } => write!(f, "product {product}: demand {demand} < 1"),
            OfferOutOfRange { market, product } => write!(f, "offer ({market},{product}) references a missing market or product"),
            PriceNotPositive { market, product, price } => write!(f, "offer ({market},{product}): price {price} < 1"),
            QuantityNotPositive { market, product, quantity } => {
                write!(f, "offer ({market},{product}): quantity {quantity} < 1")
            }
            UnrestrictedQuantity { market, product, quantity, demand } => {
                write!(f, "offer ({market},{product}): unrestricted quantity {quantity} != demand {demand}")
            }
            QuantityExceedsDemand { market, product, quantity, demand } => {
                write!(f, "offer ({market},{product}): quantity {quantity} exceeds demand {demand}")
            }
            ProductUnoffered { product } => write!(f, "product {product} is offered nowhere"),
            InsufficientSupply { product, supply, demand } => {
                write!(f, "product {product}: total supply {supply} < demand {demand}")
            }
        }
    }
}

/// A depot-rooted simple cycle: `0, v1, ..., vT, 0` with distinct markets.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Route(Vec<usize>);

impl Route {
    /// Full node sequence including both depot visits.
    pub fn new(nodes: Vec<usize>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::MalformedRoute(format!("route {nodes:?} visits no market")));
        }
        if nodes[0] != 0 || nodes[nodes.len() - 1] != 0 {
            return Err(Error::MalformedRoute(format!("route {nodes:?} must start and end at the depot")));
        }
        let mut seen = BTreeSet::new();
        for &v in &nodes[1..nodes.len() - 1] {
            if v == 0 || !seen.insert(v) {
                return Err(Error::MalformedRoute(format!("route {nodes:?} repeats node {v}")));
            }
        }
        Ok(Self(nodes))
    }

    /// Route visiting `markets` in order, depot prepended and appended.
    pub fn from_markets(markets: &[usize]) -> Result<Self> {
        let mut nodes = Vec::with_capacity(markets.len() + 2);
        nodes.push(0);
        nodes.extend_from_slice(markets);
        nodes.push(0);
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    /// Visited markets in tour order.
    pub fn markets(&self) -> &[usize] {
        &self.0[1..self.0.len() - 1]
    }

    pub fn market_set(&self) -> BTreeSet<usize> {
        self.markets().iter().copied().collect()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Self(v)
    }

    /// Total cost of the closed tour under `dist`.
    pub fn travel_cost(&self, dist: &DistanceMatrix) -> Result<i64> {
        route_travel_cost(&self.0, dist)
    }
}

/// Sum of edge costs along `nodes` (which is expected to end at the depot).
pub fn route_travel_cost(nodes: &[usize], dist: &DistanceMatrix) -> Result<i64> {
    if let Some(&bad) = nodes.iter().find(|&&v| v >= dist.len()) {
        return Err(Error::MalformedRoute(format!("node {bad} out of range for {} nodes", dist.len())));
    }
    Ok(nodes.windows(2).map(|w| dist.get(w[0], w[1])).sum())
}

/// Purchased units keyed by `(market, product)`; zero entries are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchasePlan(BTreeMap<(usize, usize), i64>);

impl PurchasePlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, market: usize, product: usize, units: i64) {
        if units > 0 {
            *self.0.entry((market, product)).or_insert(0) += units;
        }
    }

    pub fn get(&self, market: usize, product: usize) -> i64 {
        self.0.get(&(market, product)).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), i64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Units bought of `product` across all markets.
    pub fn units_of(&self, product: usize) -> i64 {
        self.0.iter().filter(|((_, k), _)| *k == product).map(|(_, &z)| z).sum()
    }

    /// Checks `z_ik <= q_ik`, purchases only at `visited` markets, and exact demand cover.
    pub fn check(&self, inst: &TppInstance, visited: &BTreeSet<usize>) -> Result<()> {
        for ((i, k), z) in self.iter() {
            let offer = inst.offer(i, k).ok_or(Error::UnknownOffer { market: i, product: k })?;
            if !visited.contains(&i) {
                return Err(Error::Structure(format!("purchase at unvisited market {i}")));
            }
            if z > offer.quantity {
                return Err(Error::Structure(format!("buys {z} of product {k} at market {i}, only {} offered", offer.quantity)));
            }
        }
        for k in 0..inst.num_products() {
            let got = self.units_of(k);
            if got != inst.demand(k) {
                return Err(Error::Structure(format!("product {k}: bought {got}, demand {}", inst.demand(k))));
            }
        }
        Ok(())
    }
}

/// A route with its purchase plan and the integer costs of both.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub route: Route,
    pub plan: PurchasePlan,
    pub travel_cost: i64,
    pub purchase_cost: i64,
    pub objective: i64,
}

impl Solution {
    /// Costs the given route and plan against `inst`.
    pub fn new(inst: &TppInstance, route: Route, plan: PurchasePlan) -> Result<Self> {
        let travel_cost = route.travel_cost(inst.dist())?;
        let purchase_cost = crate::purchase::plan_cost(&plan, inst)?;
        let objective = travel_cost + purchase_cost;
        assert_eq!(objective, travel_cost + purchase_cost);
        Ok(Self { route, plan, travel_cost, purchase_cost, objective })
    }

    /// Feasibility against the instance: valid route and exact demand cover.
    pub fn check(&self, inst: &TppInstance) -> Result<()> {
        if self.route.markets().iter().any(|&v| v > inst.num_markets()) {
            return Err(Error::MalformedRoute("market index out of range".into()));
        }
        self.plan.check(inst, &self.route.market_set())?;
        let recomputed = Solution::new(inst, self.route.clone(), self.plan.clone())?;
        if recomputed.objective != self.objective {
            return Err(Error::Structure(format!(
                "stored objective {} disagrees with recomputed {}",
                self.objective, recomputed.objective
            )));
        }
        Ok(())
    }
}
