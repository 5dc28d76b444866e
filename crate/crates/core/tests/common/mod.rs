#![allow(dead_code)]

use pmq::rng::{replica_rng, tag_hash, SimRng};
use rayon::prelude::*;

pub const SEED: u64 = 2026;

/// `replicas` draws of `f`, each from its own stream, in replica order.
pub fn draws<T, F>(tag: &str, replicas: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng) -> T + Sync,
{
    let tag = tag_hash(tag);
    (0..replicas)
        .into_par_iter()
        .map(|r| f(&mut replica_rng(SEED, tag, r)))
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// CDF of the density `2(1 - m)` on `[0, 1]`.
pub fn triangular_cdf(m: f64) -> f64 {
    let m = m.clamp(0.0, 1.0);
    m * (2.0 - m)
}

pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}
