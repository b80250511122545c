//! The attention policy: bipartite input embedding, market encoder and the
//! pointer decoder that builds routes step by step.
//!
//! Instances of a batch are stacked row-wise; attention and the pointer only
//! look inside each instance's own rows, so a batch of one and a batch of
//! many give the same per-instance result in inference mode.

mod graph;
mod net;

pub use graph::{build_bipartite, BipartiteGraph, Edge, COORD_SCALE};
pub use net::{Batch, Decode, DecodeState, DemandWeights, Encoded, Policy, PolicyConfig, Rollout, StepOutput};
