//! The spine Markov chain `(X_k, M_k)`, its coupling with an exact uniform
//! draw, the killed chain and the Foster-Lyapunov drift check.
//!
//! Given `X_{k-1} = x`, let `a = min(x, 1 - x)` and `L = -ln(x(1 - x))`.
//! The event `E = {M_k < a}` has probability `a L`; on it `M_k` is uniform
//! on `(0, a)` and independent of `X_k`, whose density
//! `(1/(1-y) 1{y<x} + 1/y 1{y>x}) / L` dominates `1/L`. Splitting off that
//! uniform floor with probability `1/L` is the coupling.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_open_unit, Result};
use crate::numerics::{integrate, invert_increasing};
use crate::quadtree::sample_spine_step;
use crate::rng::{open01, replica_rng, tag_hash};
use crate::stats::Summary;

/// One transition of `(X, M)` from place `x`.
#[inline]
pub fn chain_step<R: Rng + ?Sized>(x: f64, rng: &mut R) -> (f64, f64) {
    sample_spine_step(x, rng)
}

fn ln_x_one_minus_x(x: f64) -> f64 {
    x.ln() + (-x).ln_1p()
}

/// `P(E) = -(x ∧ (1-x)) ln(x(1-x))`.
pub fn event_probability(x: f64) -> f64 {
    -x.min(1.0 - x) * ln_x_one_minus_x(x)
}

/// Parameter of the coupling coin on `E`: `-1 / ln(x(1-x))`.
pub fn coupling_parameter(x: f64) -> f64 {
    -1.0 / ln_x_one_minus_x(x)
}

/// Inverse CDF of the place law on `E` at quantile `w`.
pub fn event_place_quantile(x: f64, w: f64) -> f64 {
    let left = -(-x).ln_1p();
    let c = w * -ln_x_one_minus_x(x);
    if c < left {
        -(-c).exp_m1()
    } else {
        x * (c - left).exp()
    }
}

/// Inverse CDF of the residual place law (density proportional to
/// `(1/(1-y) - 1) 1{y<x} + (1/y - 1) 1{y>x}`) at quantile `w`.
pub fn residual_place_quantile(x: f64, w: f64) -> f64 {
    let left_mass = -(-x).ln_1p() - x;
    let right_mass = -x.ln() - (1.0 - x);
    let c = w * (left_mass + right_mass);
    let residual_norm = -ln_x_one_minus_x(x) - 1.0;
    assert!(residual_norm > 1e-12, "residual mass vanished at x = {x}");
    if c < left_mass {
        invert_increasing(|y: f64| -(-y).ln_1p() - y, |y| y / (1.0 - y), c, 0.0, x)
    } else {
        invert_increasing(
            |y: f64| (y / x).ln() - (y - x),
            |y| 1.0 / y - 1.0,
            c - left_mass,
            x,
            1.0,
        )
    }
}

/// Sample of `(X_k, M_k)` conditional on the complement of `E`.
///
/// The place has density `(1-x)/(1-y)^2 - a/(1-y)` on `(0, x)` and
/// `x/y^2 - a/y` on `(x, 1)`; given the place, the mass ratio is uniform on
/// `[a, (1-x)/(1-y))` or `[a, x/y)`.
pub fn sample_off_event<R: Rng + ?Sized>(x: f64, rng: &mut R) -> (f64, f64) {
    let a = x.min(1.0 - x);
    let left_mass = x + a * (-x).ln_1p();
    let right_mass = 1.0 - x + a * x.ln();
    let c = open01(rng) * (left_mass + right_mass);
    let (y, bound) = if c < left_mass {
        let y = invert_increasing(
            |y: f64| (1.0 - x) * y / (1.0 - y) + a * (-y).ln_1p(),
            |y| (1.0 - x) / ((1.0 - y) * (1.0 - y)) - a / (1.0 - y),
            c,
            0.0,
            x,
        );
        (y, (1.0 - x) / (1.0 - y))
    } else {
        let y = invert_increasing(
            |y: f64| 1.0 - x / y - a * (y / x).ln(),
            |y| x / (y * y) - a / y,
            c - left_mass,
            x,
            1.0,
        );
        (y, x / y)
    };
    let m = a + open01(rng) * (bound - a);
    (y, m.min(1.0))
}

/// Result of one transition of the coupled chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledTransition {
    pub x: f64,
    pub m: f64,
    /// `B_k`: the new place is an exact uniform draw.
    pub coupled: bool,
}

/// One transition by the two-stage device.
pub fn coupled_transition<R: Rng + ?Sized>(x: f64, rng: &mut R) -> CoupledTransition {
    let a = x.min(1.0 - x);
    if open01(rng) < event_probability(x) {
        let m = a * open01(rng);
        if open01(rng) < coupling_parameter(x) {
            CoupledTransition {
                x: open01(rng),
                m,
                coupled: true,
            }
        } else {
            CoupledTransition {
                x: residual_place_quantile(x, open01(rng)),
                m,
                coupled: false,
            }
        }
    } else {
        let (y, m) = sample_off_event(x, rng);
        CoupledTransition {
            x: y,
            m,
            coupled: false,
        }
    }
}

/// State of the coupled chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainState {
    pub x: f64,
    pub k: usize,
    /// `log(M_1 ... M_k)`.
    pub log_mbar: f64,
    /// `T = inf{k : B_k = 1}` once it has happened.
    pub coupling_time: Option<usize>,
}

impl ChainState {
    pub fn start(x: f64) -> Self {
        ChainState {
            x,
            k: 0,
            log_mbar: 0.0,
            coupling_time: None,
        }
    }

    pub fn is_coupled(&self) -> bool {
        self.coupling_time.is_some()
    }
}

/// Advances the coupled chain one step. Before coupling this runs the
/// device; afterwards the flag no longer matters and the same transition
/// law is used.
pub fn coupled_step<R: Rng + ?Sized>(state: &ChainState, rng: &mut R) -> ChainState {
    let t = coupled_transition(state.x, rng);
    let k = state.k + 1;
    ChainState {
        x: t.x,
        k,
        log_mbar: state.log_mbar + t.m.ln(),
        coupling_time: state.coupling_time.or(t.coupled.then_some(k)),
    }
}

/// Runs the coupled chain for exactly `k` steps from `x`.
pub fn run_coupled<R: Rng + ?Sized>(x: f64, k: usize, rng: &mut R) -> Result<ChainState> {
    check_open_unit("x", x)?;
    let mut s = ChainState::start(x);
    for _ in 0..k {
        s = coupled_step(&s, rng);
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CouplingOutcome {
    Coupled {
        t: usize,
        x_at_t: f64,
        log_mbar_at_t: f64,
    },
    /// No coupling within the horizon.
    Censored { k_max: usize },
}

impl CouplingOutcome {
    pub fn time(&self) -> Option<usize> {
        match *self {
            CouplingOutcome::Coupled { t, .. } => Some(t),
            CouplingOutcome::Censored { .. } => None,
        }
    }
}

pub const DEFAULT_HORIZON: usize = 200;

/// First `k` with `B_k = 1`, censored at `k_max`.
pub fn coupling_time<R: Rng + ?Sized>(
    x: f64,
    k_max: usize,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    check_open_unit("x", x)?;
    let mut s = ChainState::start(x);
    while s.k < k_max {
        s = coupled_step(&s, rng);
        if let Some(t) = s.coupling_time {
            return Ok(CouplingOutcome::Coupled {
                t,
                x_at_t: s.x,
                log_mbar_at_t: s.log_mbar,
            });
        }
    }
    Ok(CouplingOutcome::Censored { k_max })
}

/// Position of the killed chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Position {
    Live(f64),
    Cemetery,
}

/// The potential `V`: `10/sqrt(x)` below 1/2, `10/sqrt(1-x)` from 1/2 on,
/// and 1 at the cemetery.
pub fn potential(p: Position) -> f64 {
    match p {
        Position::Cemetery => 1.0,
        Position::Live(x) if x < 0.5 => 10.0 / x.sqrt(),
        Position::Live(x) => 10.0 / (1.0 - x).sqrt(),
    }
}

/// The killed kernel `p(x, dy)` split into its absolutely continuous part
/// and the mass sent to the cemetery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KilledKernel {
    pub density: f64,
    pub kill_mass: f64,
}

pub fn killed_kernel(x: f64, y: f64) -> KilledKernel {
    let a = x.min(1.0 - x);
    let base = if y < x {
        (1.0 - x) / ((1.0 - y) * (1.0 - y))
    } else if y > x {
        x / (y * y)
    } else {
        a
    };
    KilledKernel {
        density: base - a,
        kill_mass: a,
    }
}

/// One step of the killed chain. The live part is sampled by the closed
/// form inverse of its CDF (a quadratic on each side of `x`).
pub fn killed_step<R: Rng + ?Sized>(p: Position, rng: &mut R) -> Position {
    let Position::Live(x) = p else {
        return Position::Cemetery;
    };
    let a = x.min(1.0 - x);
    if open01(rng) < a {
        return Position::Cemetery;
    }
    let c = open01(rng) * (1.0 - a);
    let left_mass = x * (1.0 - a);
    let y = if c < left_mass {
        // a y^2 + (1 - x - a + c) y - c = 0, positive root
        let b = 1.0 - x - a + c;
        2.0 * c / (b + (b * b + 4.0 * a * c).sqrt())
    } else {
        // a y^2 - (1 + a x - c') y + x = 0, root in (x, 1)
        let b = 1.0 + a * x - (c - left_mass);
        let disc = (b * b - 4.0 * a * x).max(0.0);
        2.0 * x / (b + disc.sqrt())
    };
    Position::Live(y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// First time the killed chain started at `x` reaches the cemetery.
pub fn killing_time<R: Rng + ?Sized>(x: f64, k_max: usize, rng: &mut R) -> Option<usize> {
    let mut p = Position::Live(x);
    for k in 1..=k_max {
        p = killed_step(p, rng);
        if p == Position::Cemetery {
            return Some(k);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub x: f64,
    /// `∫ p(x, dy) V(y)` including the cemetery term.
    pub integral: f64,
    pub potential: f64,
    pub ratio: f64,
}

pub const DRIFT_TOLERANCE: f64 = 1e-8;

/// `∫ p(x, dy) V(y) / V(x)`.
///
/// The `1/sqrt` endpoint singularities of `V` are removed by the
/// substitutions `y = s^2` on `(0, 1/2)` and `y = 1 - s^2` on `(1/2, 1)`;
/// the pieces are split at the kernel discontinuity `y = x`.
pub fn drift_check(x: f64) -> Result<DriftReport> {
    check_open_unit("x", x)?;
    let density = |y: f64| killed_kernel(x, y).density;
    let mut breaks = vec![0.0, 0.5, 1.0];
    if x != 0.5 {
        breaks.push(x);
    }
    breaks.sort_by(f64::total_cmp);
    let tol = DRIFT_TOLERANCE * 1e-2;
    let mut live = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        live += if hi <= 0.5 {
            integrate(|s| 20.0 * density(s * s), lo.sqrt(), hi.sqrt(), tol)
        } else {
            integrate(
                |s| 20.0 * density(1.0 - s * s),
                (1.0 - hi).sqrt(),
                (1.0 - lo).sqrt(),
                tol,
            )
        };
    }
    let kernel = killed_kernel(x, x);
    let integral = live + kernel.kill_mass * potential(Position::Cemetery);
    let v = potential(Position::Live(x));
    Ok(DriftReport {
        x,
        integral,
        potential: v,
        ratio: integral / v,
    })
}

/// CSV with header `x,ratio`.
pub fn write_drift_csv<W: Write>(reports: &[DriftReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "ratio"])?;
    for r in reports {
        w.write_record([format!("{:.17e}", r.x), format!("{:.17e}", r.ratio)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingRecord {
    pub replica: u64,
    pub x0: f64,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub censored: bool,
    #[serde(rename = "logMbar_at_T")]
    pub log_mbar_at_t: Option<f64>,
}

pub fn coupling_campaign(
    x0: f64,
    k_max: usize,
    replicas: u64,
    seed: u64,
) -> Result<Vec<CouplingRecord>> {
    check_open_unit("x", x0)?;
    Ok((0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, tag_hash("coupling") ^ x0.to_bits(), r);
            let outcome = coupling_time(x0, k_max, &mut rng).expect("x checked");
            match outcome {
                CouplingOutcome::Coupled {
                    t, log_mbar_at_t, ..
                } => CouplingRecord {
                    replica: r,
                    x0,
                    t: Some(t),
                    censored: false,
                    log_mbar_at_t: Some(log_mbar_at_t),
                },
                CouplingOutcome::Censored { .. } => CouplingRecord {
                    replica: r,
                    x0,
                    t: None,
                    censored: true,
                    log_mbar_at_t: None,
                },
            }
        })
        .collect())
}

/// CSV with header `replica,x0,T,censored,logMbar_at_T`.
pub fn write_coupling_csv<W: Write>(records: &[CouplingRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Estimate of `E[rho^T]` from the uncensored runs, with the number of
/// censored runs reported alongside.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometricMoment {
    pub rho: f64,
    pub k_max: usize,
    pub estimate: Summary,
    pub censored: usize,
}

pub fn geometric_moment(records: &[CouplingRecord], rho: f64, k_max: usize) -> GeometricMoment {
    let values: Vec<f64> = records
        .iter()
        .filter_map(|r| r.t.filter(|&t| t <= k_max))
        .map(|t| rho.powi(t as i32))
        .collect();
    GeometricMoment {
        rho,
        k_max,
        censored: records.len() - values.len(),
        estimate: Summary::from_samples(&values),
    }
}
