//! Self-similar binary fragmentations with index 1.
//!
//! A fragment of mass `m` waits an exponential time of rate `m`, then
//! splits into `(r1 m, r2 m)` with `(r1, r2)` drawn from a dislocation law.
//! Two laws matter here: the area ratios of the two rectangles meeting the
//! query line after the first split, with the query uniform (`Uniform`) or
//! at the left edge (`LeftEdge`).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, Error, Result};
use crate::numerics::brent;
use crate::rng::{exponential, open01, replica_rng, tag_hash};

/// Ordered pair of child mass ratios, `s1 >= s2 > 0`, `s1 + s2 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DislocationSample {
    pub s1: f64,
    pub s2: f64,
}

impl DislocationSample {
    fn ordered(a: f64, b: f64) -> Self {
        DislocationSample {
            s1: a.max(b),
            s2: a.min(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dislocation {
    /// Query line at a uniform abscissa.
    Uniform,
    /// Query line at `x = 0`.
    LeftEdge,
}

impl Dislocation {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> DislocationSample {
        match self {
            Dislocation::Uniform => dislocation_uniform(rng),
            Dislocation::LeftEdge => dislocation_x0(rng),
        }
    }

    /// `1 - E[s1^b + s2^b]` in closed form.
    pub fn psi(self, beta: f64) -> f64 {
        match self {
            Dislocation::Uniform => {
                (beta * beta + 3.0 * beta - 2.0) / ((beta + 1.0) * (beta + 2.0))
            }
            Dislocation::LeftEdge => {
                let b1 = beta + 1.0;
                (b1 * b1 - 2.0) / (b1 * b1)
            }
        }
    }

    pub fn malthusian_exponent(self) -> f64 {
        malthusian_root(&MalthusianSpec::closed_form(self), 0.1, 1.0)
            .expect("closed-form psi changes sign on [0.1, 1]")
    }
}

/// Area ratios of the two rectangles meeting a uniformly placed query line.
/// The query picks the column containing it, so the shared width factor is
/// size-biased (density `2w`) rather than uniform.
pub fn dislocation_uniform<R: Rng + ?Sized>(rng: &mut R) -> DislocationSample {
    let query = open01(rng);
    let u = open01(rng);
    let v = open01(rng);
    let width = if query < u { u } else { 1.0 - u };
    DislocationSample::ordered(width * v, width * (1.0 - v))
}

/// Area ratios of the two left rectangles after a split at `(u, v)`.
pub fn dislocation_x0<R: Rng + ?Sized>(rng: &mut R) -> DislocationSample {
    let u = open01(rng);
    let v = open01(rng);
    DislocationSample::ordered(u * v, u * (1.0 - v))
}

/// `psi(beta) = 1 - E[s1^beta + s2^beta]` and the root search around it.
pub struct MalthusianSpec {
    psi: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl MalthusianSpec {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(psi: F) -> Self {
        MalthusianSpec { psi: Box::new(psi) }
    }

    pub fn closed_form(d: Dislocation) -> Self {
        Self::new(move |b| d.psi(b))
    }

    pub fn psi(&self, beta: f64) -> f64 {
        (self.psi)(beta)
    }
}

/// Root of `psi` in `[lo, hi]` (Brent).
pub fn malthusian_root(spec: &MalthusianSpec, lo: f64, hi: f64) -> Result<f64> {
    let (f_lo, f_hi) = (spec.psi(lo), spec.psi(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    brent(|b| spec.psi(b), lo, hi, 1e-16)
}

/// Fragments whose log-mass falls below this are frozen: their expected
/// waiting time exceeds e^60.
pub const FREEZE_LOG_MASS: f64 = -60.0;

#[derive(Debug, Clone)]
struct Fragment {
    log_mass: f64,
    lineage: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Alarm {
    time: f64,
    slot: usize,
}

impl PartialEq for Alarm {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Alarm {}
impl PartialOrd for Alarm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Alarm {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.slot.cmp(&self.slot))
    }
}

/// Live and frozen fragments of one run, with their pending split times.
#[derive(Debug, Clone)]
pub struct FragmentSet {
    dislocation: Dislocation,
    fragments: Vec<Fragment>,
    frozen: Vec<f64>,
    alarms: BinaryHeap<Alarm>,
    now: f64,
    splits: usize,
}

impl FragmentSet {
    /// A single fragment of mass 1 at time 0.
    pub fn new<R: Rng + ?Sized>(dislocation: Dislocation, rng: &mut R) -> Self {
        Self::start(dislocation, false, rng)
    }

    /// Like [`FragmentSet::new`], also recording every fragment's ratios.
    pub fn with_lineage<R: Rng + ?Sized>(dislocation: Dislocation, rng: &mut R) -> Self {
        Self::start(dislocation, true, rng)
    }

    fn start<R: Rng + ?Sized>(dislocation: Dislocation, lineage: bool, rng: &mut R) -> Self {
        let mut set = FragmentSet {
            dislocation,
            fragments: Vec::new(),
            frozen: Vec::new(),
            alarms: BinaryHeap::new(),
            now: 0.0,
            splits: 0,
        };
        set.fragments.push(Fragment {
            log_mass: 0.0,
            lineage: lineage.then(Vec::new),
        });
        set.arm(0, 0.0, rng);
        set
    }

    fn arm<R: Rng + ?Sized>(&mut self, slot: usize, from: f64, rng: &mut R) {
        let rate = self.fragments[slot].log_mass.exp();
        self.alarms.push(Alarm {
            time: from + exponential(rng, rate),
            slot,
        });
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn splits(&self) -> usize {
        self.splits
    }

    /// Live plus frozen fragments.
    pub fn count(&self) -> usize {
        self.alarms.len() + self.frozen.len()
    }

    pub fn next_split_time(&self) -> f64 {
        self.alarms.peek().map_or(f64::INFINITY, |a| a.time)
    }

    pub fn log_masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.alarms
            .iter()
            .map(|a| self.fragments[a.slot].log_mass)
            .chain(self.frozen.iter().copied())
    }

    /// `sum m^exponent` over all fragments, frozen ones included.
    pub fn martingale(&self, exponent: f64) -> f64 {
        self.log_masses().map(|l| (exponent * l).exp()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.log_masses().map(f64::exp).sum()
    }

    pub fn frozen_mass(&self) -> f64 {
        self.frozen.iter().map(|l| l.exp()).sum()
    }

    /// `(log mass, ratios)` for live fragments of a lineage-tracking run.
    pub fn lineages(&self) -> Vec<(f64, Vec<f64>)> {
        self.alarms
            .iter()
            .filter_map(|a| {
                let f = &self.fragments[a.slot];
                f.lineage.clone().map(|l| (f.log_mass, l))
            })
            .collect()
    }

    /// Performs the next split and returns the ratios used.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<DislocationSample> {
        let Alarm { time, slot } = self.alarms.pop()?;
        self.now = time;
        self.splits += 1;
        let ratios = self.dislocation.sample(rng);
        let parent = self.fragments[slot].clone();
        let child = |r: f64| Fragment {
            log_mass: parent.log_mass + r.ln(),
            lineage: parent.lineage.as_ref().map(|l| {
                let mut l = l.clone();
                l.push(r);
                l
            }),
        };
        let (first, second) = (child(ratios.s1), child(ratios.s2));
        self.fragments[slot] = first;
        self.fragments.push(second);
        let new_slot = self.fragments.len() - 1;
        for s in [slot, new_slot] {
            if self.fragments[s].log_mass < FREEZE_LOG_MASS {
                self.frozen.push(self.fragments[s].log_mass);
            } else {
                self.arm(s, time, rng);
            }
        }
        Some(ratios)
    }

    pub fn advance_to<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        while self.next_split_time() <= t {
            self.step(rng);
        }
        self.now = self.now.max(t);
    }
}

/// Number of fragments at time `t`.
pub fn simulate_fragment_count<R: Rng + ?Sized>(
    t: f64,
    dislocation: Dislocation,
    rng: &mut R,
) -> usize {
    let mut set = FragmentSet::new(dislocation, rng);
    set.advance_to(t.max(0.0), rng);
    set.count()
}

pub fn p_star() -> f64 {
    std::f64::consts::SQRT_2 - 1.0
}

/// Step path of `sum area^(sqrt 2 - 1)` over the rectangles meeting the
/// left edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingalePath {
    /// Split times; the path equals 1 before the first.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl MartingalePath {
    pub fn value_at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => 1.0,
            i => self.values[i - 1],
        }
    }
}

pub fn martingale_path<R: Rng + ?Sized>(t_max: f64, rng: &mut R) -> Result<MartingalePath> {
    check_positive("t_max", t_max)?;
    let p = p_star();
    let mut set = FragmentSet::new(Dislocation::LeftEdge, rng);
    let mut path = MartingalePath {
        times: Vec::new(),
        values: Vec::new(),
        counts: Vec::new(),
    };
    let mut value = 1.0;
    while set.next_split_time() <= t_max {
        let parent_log = {
            let top = set.alarms.peek().expect("next split exists");
            set.fragments[top.slot].log_mass
        };
        let r = set.step(rng).expect("next split exists");
        // parent term m^p becomes (r1 m)^p + (r2 m)^p
        value += (p * parent_log).exp() * (r.s1.powf(p) + r.s2.powf(p) - 1.0);
        path.times.push(set.now());
        path.values.push(value);
        path.counts.push(set.count());
    }
    Ok(path)
}

/// `c_0 = Gamma(2 sqrt 2) / (sqrt 2 Gamma(sqrt 2)^3)`.
pub fn c_zero() -> f64 {
    crate::analytics::constants().c_0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Row {
    pub t: f64,
    /// Mean of `t^(1 - sqrt 2) N_t(0)`.
    pub mean_scaled_cost: f64,
    pub mean_martingale: f64,
    /// `E[(t^(1 - sqrt 2) N_t(0) - c_0 M_t)^2]`.
    pub mean_sq_gap: f64,
    pub correlation: f64,
}

/// Paired samples of the scaled cost at the left edge and the martingale on
/// a time grid, one fragmentation per replica.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftEdgeSamples {
    pub times: Vec<f64>,
    /// `costs[i][r]` is `N_{times[i]}(0)` for replica `r`.
    pub costs: Vec<Vec<f64>>,
    pub martingales: Vec<Vec<f64>>,
    pub frozen_mass: Vec<Vec<f64>>,
}

pub fn left_edge_samples(times: &[f64], replicas: u64, seed: u64) -> LeftEdgeSamples {
    let p = p_star();
    let mut grid = times.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows: Vec<Vec<(f64, f64, f64)>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, tag_hash("left-edge"), r);
            let mut set = FragmentSet::new(Dislocation::LeftEdge, &mut rng);
            grid.iter()
                .map(|&t| {
                    set.advance_to(t, &mut rng);
                    (
                        (set.count() - 1) as f64,
                        set.martingale(p),
                        set.frozen_mass(),
                    )
                })
                .collect()
        })
        .collect();
    let column =
        |i: usize, pick: fn(&(f64, f64, f64)) -> f64| rows.iter().map(|r| pick(&r[i])).collect();
    LeftEdgeSamples {
        costs: (0..grid.len()).map(|i| column(i, |c| c.0)).collect(),
        martingales: (0..grid.len()).map(|i| column(i, |c| c.1)).collect(),
        frozen_mass: (0..grid.len()).map(|i| column(i, |c| c.2)).collect(),
        times: grid,
    }
}

pub fn l2_limit_check(times: &[f64], replicas: u64, seed: u64) -> Result<Vec<L2Row>> {
    if replicas < 1000 {
        return Err(Error::Config(format!(
            "l2 limit check needs at least 1000 replicas, got {replicas}"
        )));
    }
    let c0 = c_zero();
    let exponent = 1.0 - std::f64::consts::SQRT_2;
    let samples = left_edge_samples(times, replicas, seed);
    let n = replicas as f64;
    Ok(samples
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let scaled: Vec<f64> = samples.costs[i]
                .iter()
                .map(|c| c * t.powf(exponent))
                .collect();
            let mart = &samples.martingales[i];
            L2Row {
                t,
                mean_scaled_cost: scaled.iter().sum::<f64>() / n,
                mean_martingale: mart.iter().sum::<f64>() / n,
                mean_sq_gap: scaled
                    .iter()
                    .zip(mart)
                    .map(|(s, m)| (s - c0 * m).powi(2))
                    .sum::<f64>()
                    / n,
                correlation: crate::stats::pearson(&scaled, mart),
            }
        })
        .collect())
}

/// CSV with header `replica,t,count,martingale_value,frozen_mass`.
pub fn write_fragment_csv<W: Write>(samples: &LeftEdgeSamples, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "t", "count", "martingale_value", "frozen_mass"])?;
    for (i, &t) in samples.times.iter().enumerate() {
        for r in 0..samples.costs[i].len() {
            w.write_record([
                r.to_string(),
                format!("{t}"),
                format!("{}", samples.costs[i][r] as u64 + 1),
                format!("{:.17e}", samples.martingales[i][r]),
                format!("{:.17e}", samples.frozen_mass[i][r]),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
