use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::generate::generate_with;
use crate::instance::GeneratorSpec;
use crate::model::{TppInstance, Variant};

/// An instance distribution written `u:M:K` or `r:M:K:LAMBDA`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distribution {
    pub variant: Variant,
    pub markets: usize,
    pub products: usize,
    pub lambda: Option<f64>,
}

impl Distribution {
    pub fn unrestricted(markets: usize, products: usize) -> Self {
        Self { variant: Variant::Unrestricted, markets, products, lambda: None }
    }

    pub fn restricted(markets: usize, products: usize, lambda: f64) -> Self {
        Self { variant: Variant::Restricted, markets, products, lambda: Some(lambda) }
    }

    pub fn spec(&self, seed: u64) -> GeneratorSpec {
        GeneratorSpec { num_markets: self.markets, num_products: self.products, variant: self.variant, lambda: self.lambda, seed }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TppInstance> {
        generate_with(&self.spec(0), rng)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lambda {
            Some(l) => write!(f, "{}:{}:{}:{}", self.variant.code().to_ascii_lowercase(), self.markets, self.products, l),
            None => write!(f, "{}:{}:{}", self.variant.code().to_ascii_lowercase(), self.markets, self.products),
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("distribution `{s}`: expected u:M:K or r:M:K:LAMBDA"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let count = |p: &str| p.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(bad);
        let dist = match parts.as_slice() {
            [v, m, k] if v.eq_ignore_ascii_case("u") => Self::unrestricted(count(m)?, count(k)?),
            [v, m, k, l] if v.eq_ignore_ascii_case("r") => {
                let l: f64 = l.parse().map_err(|_| bad())?;
                Self::restricted(count(m)?, count(k)?, l)
            }
            _ => return Err(bad()),
        };
        dist.spec(0).validate()?;
        Ok(dist)
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
