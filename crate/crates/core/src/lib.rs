//! Travelling purchaser problems: instances, exact and heuristic solvers,
//! and a learned route-construction policy.

pub mod env;
pub mod error;
pub mod eval;
pub mod heuristics;
pub mod instance;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod policy;
pub mod purchase;
pub mod training;

pub use error::{Error, Result};
pub use model::{DistanceMatrix, Offer, Point, PurchasePlan, Rounding, Route, Solution, TppInstance, Variant};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/environment.md")]
    mod environment {}
    #[doc = include_str!("../../../book/src/heuristics.md")]
    mod heuristics {}
    #[doc = include_str!("../../../book/src/policy.md")]
    mod policy {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
