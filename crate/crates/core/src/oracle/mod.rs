//! Exact ground truth at desk scale: Held–Karp tours, exhaustive subset
//! search, and an MILP export for cross-checking with external solvers.

mod brute;
mod held_karp;
mod milp;

pub use brute::{brute_force_solve, SubsetTours, BRUTE_FORCE_LIMIT};
pub use held_karp::{held_karp, HELD_KARP_LIMIT};
pub use milp::{export_milp, instance_hash, MilpStats};
