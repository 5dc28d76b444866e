//! The all-zeros spine: the nested bottom rectangles meeting a fixed
//! vertical query line, described in normalized coordinates.

use rand::Rng;

use crate::error::{check_open_unit, Result};
use crate::rng::{exponential, open01};

/// One split of the normalized rectangle containing the query at relative
/// place `x`, with splitting point `(u, v)`. Returns the place of the query
/// in the bottom child meeting the line and that child's area ratio.
///
/// A query exactly on the split abscissa is assigned to the right column.
#[inline]
pub fn spine_step(x: f64, u: f64, v: f64) -> (f64, f64) {
    if x < u {
        (x / u, u * v)
    } else {
        ((x - u) / (1.0 - u), (1.0 - u) * v)
    }
}

/// Samples a uniform splitting point and applies [`spine_step`].
#[inline]
pub fn sample_spine_step<R: Rng + ?Sized>(x: f64, rng: &mut R) -> (f64, f64) {
    let u = open01(rng);
    let v = open01(rng);
    spine_step(x, u, v)
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Places, log mass ratios and waiting times along the spine.
///
/// Index 0 is the unit square itself (`place = x_query`, mass ratio 1).
/// Masses are kept as logarithms so deep traces do not underflow.
#[derive(Debug, Clone, PartialEq)]
pub struct SpineTrace {
    pub x_query: f64,
    places: Vec<f64>,
    log_masses: Vec<f64>,
    /// `taus[i]` is the waiting time attached to step `i + 1`.
    taus: Vec<f64>,
    log_mbar: Vec<f64>,
    log_f: Vec<f64>,
}

impl SpineTrace {
    pub fn new(x_query: f64) -> Self {
        SpineTrace {
            x_query,
            places: vec![x_query],
            log_masses: vec![0.0],
            taus: Vec::new(),
            log_mbar: vec![0.0],
            log_f: vec![f64::NEG_INFINITY],
        }
    }

    /// Appends a step with area ratio `m` in (0, 1), new place `x` and
    /// waiting time `tau`.
    pub fn push(&mut self, x: f64, m: f64, tau: f64) {
        let log_m = m.ln();
        let k = self.depth();
        self.places.push(x);
        self.log_masses.push(log_m);
        self.taus.push(tau);
        self.log_mbar.push(self.log_mbar[k] + log_m);
        // F_k = M_k (F_{k-1} + tau_k)
        self.log_f.push(log_m + ln_add_exp(self.log_f[k], tau.ln()));
    }

    pub fn depth(&self) -> usize {
        self.taus.len()
    }

    pub fn place(&self, k: usize) -> f64 {
        self.places[k]
    }

    pub fn log_mass(&self, k: usize) -> f64 {
        self.log_masses[k]
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.log_masses[k].exp()
    }

    /// Waiting time of step `k >= 1`.
    pub fn tau(&self, k: usize) -> f64 {
        self.taus[k - 1]
    }

    /// log of the area of the k-th spine rectangle.
    pub fn log_mbar(&self, k: usize) -> f64 {
        self.log_mbar[k]
    }

    pub fn mbar(&self, k: usize) -> f64 {
        self.log_mbar[k].exp()
    }

    pub fn log_f(&self, k: usize) -> f64 {
        self.log_f[k]
    }

    /// `F_k = sum_{i<=k} tau_i prod_{j=i..k} M_j`.
    pub fn f(&self, k: usize) -> f64 {
        self.log_f[k].exp()
    }
}

/// Simulates `k` steps of the spine below the query line at `x`.
pub fn spine_trace<R: Rng + ?Sized>(x: f64, k: usize, rng: &mut R) -> Result<SpineTrace> {
    check_open_unit("x", x)?;
    let mut trace = SpineTrace::new(x);
    let mut place = x;
    for _ in 0..k {
        let (next, m) = sample_spine_step(place, rng);
        let tau = exponential(rng, 1.0);
        trace.push(next, m, tau);
        place = next;
    }
    Ok(trace)
}
