use std::io::Write;

use serde::Serialize;

use super::gamma::ln_gamma_unchecked as lg;
use crate::error::{Error, Result};

/// Relative tolerance for `k0 * p0_l1 == c_u`.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// `(sqrt 17 - 3) / 2`, growth exponent for a uniform query.
    pub beta_star: f64,
    /// `sqrt 2 - 1`, growth exponent at the left edge.
    pub p_star: f64,
    /// Prefactor of the limit curve.
    pub k0: f64,
    /// Limit of `t^-beta E[N_t(U)]`.
    pub c_u: f64,
    /// Limit of `t^(1 - sqrt 2) E[N_t(0)]`.
    pub c_0: f64,
    /// `integral of (x(1-x))^(beta/2)` over `[0, 1]`.
    pub p0_l1: f64,
}

pub fn beta_star() -> f64 {
    (17f64.sqrt() - 3.0) / 2.0
}

/// All constants, or an error if the identity `k0 * p0_l1 = c_u` fails.
pub fn try_constants() -> Result<Constants> {
    let b = beta_star();
    let s2 = std::f64::consts::SQRT_2;
    let k0 =
        (lg(2.0 * b + 2.0) + lg(b + 2.0) - 3.0 * lg(b + 1.0) - 2.0 * lg(b / 2.0 + 1.0)).exp() / 2.0;
    let c_u = (lg(2.0 * b + 2.0) - 3.0 * lg(b + 1.0)).exp() / 2.0;
    let c_0 = (lg(2.0 * s2) - 3.0 * lg(s2)).exp() / s2;
    let p0_l1 = (2.0 * lg(b / 2.0 + 1.0) - lg(b + 2.0)).exp();
    let rel = (k0 * p0_l1 - c_u).abs() / c_u;
    if rel.is_nan() || rel > IDENTITY_TOLERANCE {
        return Err(Error::ConstantIdentity(rel));
    }
    Ok(Constants {
        beta_star: b,
        p_star: s2 - 1.0,
        k0,
        c_u,
        c_0,
        p0_l1,
    })
}

/// All constants. Panics if the defining identity does not hold.
pub fn constants() -> Constants {
    try_constants().expect("limit constants are inconsistent")
}

/// `k0 (x(1-x))^(beta/2)`.
pub fn limit_curve(x: f64) -> f64 {
    let c = constants();
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    c.k0 * (x * (1.0 - x)).powf(c.beta_star / 2.0)
}

/// JSON object with every constant printed to 17 significant digits.
pub fn write_constants_json<W: Write>(c: &Constants, mut out: W) -> std::io::Result<()> {
    let fields = [
        ("beta_star", c.beta_star),
        ("p_star", c.p_star),
        ("k0", c.k0),
        ("c_u", c.c_u),
        ("c_0", c.c_0),
        ("p0_l1", c.p0_l1),
    ];
    writeln!(out, "{{")?;
    for (i, (name, value)) in fields.iter().enumerate() {
        let sep = if i + 1 < fields.len() { "," } else { "" };
        writeln!(out, "  \"{name}\": {value:.16e}{sep}")?;
    }
    writeln!(out, "}}")
}
