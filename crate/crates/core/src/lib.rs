//! Cost of partial match queries in random two-dimensional quadtrees.
//!
//! The crate contains an exact quadtree model, a Poissonized simulator that
//! tracks only the rectangles meeting the query line, the spine chain with
//! its coupling and drift checks, the associated fragmentation processes,
//! and the analytic limit constants and operators.

pub mod analytics;
pub mod chain;
pub mod error;
pub mod experiment;
pub mod fragmentation;
pub mod numerics;
pub mod poisson;
pub mod quadtree;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
