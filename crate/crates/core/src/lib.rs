//! A binary-CSP backtracking solver built around MAC (maintained arc
//! consistency) and pluggable value-ordering heuristics, including a
//! solution-count estimation heuristic that is expensive enough to be worth
//! deploying only when its expected time savings exceed its cost. The
//! `metareasoning` module carries that cost/benefit machinery; `generators`
//! produces reproducible random instance sets; `search` and `bench` drive
//! experiments and emit per-run statistics.

pub mod bench;
pub mod bitset;
pub mod csp;
pub mod error;
pub mod format;
pub mod generators;
pub mod heuristics;
pub mod metareasoning;
pub mod propagation;
pub mod rng;
pub mod search;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
