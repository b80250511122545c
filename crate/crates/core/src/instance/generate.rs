//! Synthetic instance generation.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), whose output is fixed
//! across platforms. An instance set with base seed `s` draws instance `j`
//! from a generator seeded with `s` on stream `j`, so any single instance of
//! a set can be regenerated without producing the ones before it.
//!
//! Draw order per instance: depot then market coordinates (x before y), then
//! for each product in index order the number of sellers, the seller subset
//! (sorted), and for each seller in ascending market order its price and, for
//! restricted instances, its raw quantity.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Offer, Point, TppInstance, Variant, GRID};

pub const PRICE_RANGE: (i64, i64) = (1, 10);
pub const QUANTITY_RANGE: (i64, i64) = (1, 15);

/// Demand used for every product of an unrestricted instance.
pub const UNRESTRICTED_DEMAND: i64 = 1;

/// One instance distribution plus the seed of a particular draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub num_markets: usize,
    pub num_products: usize,
    pub variant: Variant,
    pub lambda: Option<f64>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn unrestricted(num_markets: usize, num_products: usize, seed: u64) -> Self {
        Self { num_markets, num_products, variant: Variant::Unrestricted, lambda: None, seed }
    }

    pub fn restricted(num_markets: usize, num_products: usize, lambda: f64, seed: u64) -> Self {
        Self { num_markets, num_products, variant: Variant::Restricted, lambda: Some(lambda), seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Errors unless the sizes are positive and `lambda` matches the variant.
    pub fn validate(&self) -> Result<()> {
        if self.num_markets == 0 || self.num_products == 0 {
            return Err(Error::InvalidArgument("need at least one market and one product".into()));
        }
        match (self.variant, self.lambda) {
            (Variant::Unrestricted, None) => Ok(()),
            (Variant::Restricted, Some(l)) if l > 0.0 && l < 1.0 => Ok(()),
            (Variant::Restricted, _) => Err(Error::InvalidArgument("restricted instances need lambda in (0, 1)".into())),
            (Variant::Unrestricted, Some(_)) => Err(Error::InvalidArgument("lambda only applies to restricted instances".into())),
        }
    }
}

/// Generator for instance `index` of the set seeded by `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one instance of the distribution (stream 0 of `spec.seed`).
pub fn generate(spec: &GeneratorSpec) -> Result<TppInstance> {
    spec.validate()?;
    generate_with(spec, &mut instance_rng(spec.seed, 0))
}

/// Instances `0..count` of the set seeded by `spec.seed`.
pub fn generate_set(spec: &GeneratorSpec, count: usize) -> Result<Vec<TppInstance>> {
    spec.validate()?;
    (0..count)
        .map(|j| generate_with(spec, &mut instance_rng(spec.seed, j as u64)))
        .collect()
}

pub fn generate_utpp(spec: &GeneratorSpec) -> Result<TppInstance> {
    if spec.variant != Variant::Unrestricted {
        return Err(Error::InvalidArgument("generate_utpp needs an unrestricted spec".into()));
    }
    generate(spec)
}

pub fn generate_rtpp(spec: &GeneratorSpec) -> Result<TppInstance> {
    if spec.variant != Variant::Restricted {
        return Err(Error::InvalidArgument("generate_rtpp needs a restricted spec".into()));
    }
    generate(spec)
}

/// Draws an instance from `rng`, ignoring `spec.seed`.
pub fn generate_with<R: Rng + ?Sized>(spec: &GeneratorSpec, rng: &mut R) -> Result<TppInstance> {
    spec.validate()?;
    let m = spec.num_markets;
    let coord = |rng: &mut R| Point::new(rng.random_range(0..=GRID), rng.random_range(0..=GRID));
    let depot = coord(rng);
    let markets: Vec<Point> = (0..m).map(|_| coord(rng)).collect();

    let mut offers = BTreeMap::new();
    let mut demands = Vec::with_capacity(spec.num_products);
    for k in 0..spec.num_products {
        let count = rng.random_range(1..=m);
        let mut sellers: Vec<usize> = index::sample(rng, m, count).into_iter().map(|i| i + 1).collect();
        sellers.sort_unstable();
        let mut drawn = Vec::with_capacity(count);
        for &i in &sellers {
            let price = rng.random_range(PRICE_RANGE.0..=PRICE_RANGE.1);
            let quantity = match spec.variant {
                Variant::Unrestricted => UNRESTRICTED_DEMAND,
                Variant::Restricted => rng.random_range(QUANTITY_RANGE.0..=QUANTITY_RANGE.1),
            };
            drawn.push((i, price, quantity));
        }
        let demand = match spec.variant {
            Variant::Unrestricted => UNRESTRICTED_DEMAND,
            Variant::Restricted => {
                let qs: Vec<i64> = drawn.iter().map(|d| d.2).collect();
                demand_from_supplies(spec.lambda.expect("checked"), &qs)?
            }
        };
        for (i, price, q) in drawn {
            offers.insert((i, k), Offer::new(price, q.min(demand)));
        }
        demands.push(demand);
    }
    Ok(TppInstance::new(depot, markets, demands, offers, spec.variant, spec.lambda))
}

/// `⌈λ·max q + (1 − λ)·Σ q⌉`, computed exactly.
///
/// `λ` is taken as a decimal with nine fractional digits, which covers every
/// lambda in use; the ceiling is then taken in integer arithmetic so that
/// e.g. a single supply `c` yields exactly `c` for any `λ`.
pub fn demand_from_supplies(lambda: f64, quantities: &[i64]) -> Result<i64> {
    if quantities.is_empty() {
        return Err(Error::InvalidArgument("demand needs at least one supply".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside (0, 1)")));
    }
    const SCALE: i128 = 1_000_000_000;
    let lam = (lambda * SCALE as f64).round() as i128;
    let max = *quantities.iter().max().unwrap() as i128;
    let sum: i128 = quantities.iter().map(|&q| q as i128).sum();
    // λ·max + (1 − λ)·sum = sum − λ·(sum − max)
    let num = sum * SCALE - lam * (sum - max);
    Ok(((num + SCALE - 1).div_euclid(SCALE)) as i64)
}
