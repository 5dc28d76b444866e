//! Continuous-time embedding of the quadtree.
//!
//! Points arrive as a unit-intensity Poisson process on the square. Only the
//! rectangles meeting the query line matter for the cost, and each of those
//! is split after an exponential time whose rate is its area, so the
//! query-restricted simulator keeps one clock per tracked rectangle and
//! never materializes the rest of the tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_positive, check_unit, Error, Result};
use crate::quadtree::{PointRecord, QuadTree};
use crate::rng::{exponential, open01, replica_rng};
use crate::stats::Summary;

/// Increasing arrival times of the unit-rate Poisson process.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProcess {
    pub taus: Vec<f64>,
}

impl ArrivalProcess {
    pub fn until<R: Rng + ?Sized>(t_max: f64, rng: &mut R) -> Self {
        let mut taus = Vec::new();
        let mut t = exponential(rng, 1.0);
        while t <= t_max {
            taus.push(t);
            t += exponential(rng, 1.0);
        }
        ArrivalProcess { taus }
    }

    pub fn first_n<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut t = 0.0;
        let taus = (0..n)
            .map(|_| {
                t += exponential(rng, 1.0);
                t
            })
            .collect();
        ArrivalProcess { taus }
    }

    /// `#{i : tau_i <= t}`.
    pub fn count_by(&self, t: f64) -> usize {
        self.taus.partition_point(|&tau| tau <= t)
    }
}

/// Right-continuous step path of `t -> N_t(x)`, stored by its jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostPath {
    pub x: f64,
    pub t_max: f64,
    pub jump_times: Vec<f64>,
    /// Value on `[jump_times[i], jump_times[i + 1])`.
    pub values: Vec<u64>,
}

impl CostPath {
    pub fn value_at(&self, t: f64) -> u64 {
        match self.jump_times.partition_point(|&s| s <= t) {
            0 => 0,
            i => self.values[i - 1],
        }
    }

    pub fn final_value(&self) -> u64 {
        self.values.last().copied().unwrap_or(0)
    }

    pub fn is_monotone(&self) -> bool {
        self.jump_times.windows(2).all(|w| w[0] < w[1])
            && self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

#[derive(Debug, Clone, Copy)]
struct Clock {
    time: f64,
    area: f64,
    place: f64,
}

impl PartialEq for Clock {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time) == Ordering::Equal
    }
}

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    // Reversed: BinaryHeap pops the earliest clock.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time)
    }
}

/// Event-driven process of the rectangles meeting one vertical line.
#[derive(Debug, Clone)]
pub struct QueryProcess {
    heap: BinaryHeap<Clock>,
    now: f64,
    cost: u64,
    tracked_area: f64,
}

impl QueryProcess {
    /// Process started at time 0 from the unit square with the query at
    /// relative place `x`.
    pub fn new<R: Rng + ?Sized>(x: f64, rng: &mut R) -> Self {
        let mut p = QueryProcess {
            heap: BinaryHeap::new(),
            now: 0.0,
            cost: 0,
            tracked_area: 1.0,
        };
        p.schedule(0.0, 1.0, x, rng);
        p
    }

    fn schedule<R: Rng + ?Sized>(&mut self, from: f64, area: f64, place: f64, rng: &mut R) {
        self.heap.push(Clock {
            time: from + exponential(rng, area),
            area,
            place,
        });
    }

    pub fn cost(&self) -> u64 {
        self.cost
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Total area of the tracked rectangles.
    pub fn tracked_area(&self) -> f64 {
        self.tracked_area
    }

    pub fn tracked(&self) -> usize {
        self.heap.len()
    }

    pub fn next_event_time(&self) -> f64 {
        self.heap.peek().map_or(f64::INFINITY, |c| c.time)
    }

    /// Performs the next split. Returns its time and the cost increment.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (f64, u64) {
        let Clock { time, area, place } = self.heap.pop().expect("tracked set never empties");
        self.now = time;
        let u = open01(rng);
        let v = open01(rng);
        let increment = match place.partial_cmp(&u) {
            Some(Ordering::Less) => {
                let (w, p) = (u, place / u);
                self.schedule(time, area * w * v, p, rng);
                self.schedule(time, area * w * (1.0 - v), p, rng);
                self.tracked_area -= area * (1.0 - w);
                1
            }
            Some(Ordering::Greater) => {
                let (w, p) = (1.0 - u, (place - u) / (1.0 - u));
                self.schedule(time, area * w * v, p, rng);
                self.schedule(time, area * w * (1.0 - v), p, rng);
                self.tracked_area -= area * (1.0 - w);
                1
            }
            _ => {
                // On the split abscissa: all four quadrants meet the line.
                for (w, p) in [(u, 1.0), (1.0 - u, 0.0)] {
                    self.schedule(time, area * w * v, p, rng);
                    self.schedule(time, area * w * (1.0 - v), p, rng);
                }
                3
            }
        };
        self.cost += increment;
        (time, increment)
    }

    /// Runs all splits up to and including time `t`.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> u64 {
        while self.next_event_time() <= t {
            self.step(rng);
        }
        self.now = self.now.max(t);
        self.cost
    }
}

/// Exact sample of `(N_t(x))_{t <= t_max}`.
pub fn simulate_cost_path<R: Rng + ?Sized>(x: f64, t_max: f64, rng: &mut R) -> Result<CostPath> {
    check_unit("x", x)?;
    check_positive("t_max", t_max)?;
    let mut process = QueryProcess::new(x, rng);
    let mut path = CostPath {
        x,
        t_max,
        jump_times: Vec::new(),
        values: Vec::new(),
    };
    while process.next_event_time() <= t_max {
        let (t, _) = process.step(rng);
        path.jump_times.push(t);
        path.values.push(process.cost());
    }
    Ok(path)
}

/// `N_t(x)` from the query-restricted simulator; `0` for `t <= 0`.
pub fn cost_at_time<R: Rng + ?Sized>(x: f64, t: f64, rng: &mut R) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    QueryProcess::new(x, rng).advance_to(t, rng)
}

/// `N_{tau_n}(x)`: the cost when the n-th point of the whole square has
/// arrived. Arrivals outside the tracked rectangles are counted in bulk:
/// between two tracked splits they form a Poisson number with mean
/// `(1 - tracked area) * elapsed time`.
pub fn cost_at_arrival<R: Rng + ?Sized>(n: u64, x: f64, rng: &mut R) -> Result<u64> {
    check_unit("x", x)?;
    if n == 0 {
        return Ok(0);
    }
    let mut process = QueryProcess::new(x, rng);
    let mut arrivals = 0u64;
    let mut last = 0.0;
    loop {
        let next = process.next_event_time();
        let mean = (1.0 - process.tracked_area()).max(0.0) * (next - last);
        let outside = if mean > 0.0 {
            Poisson::new(mean)
                .map(|d| d.sample(rng) as u64)
                .unwrap_or(0)
        } else {
            0
        };
        if arrivals + outside >= n {
            return Ok(process.cost());
        }
        arrivals += outside + 1;
        process.step(rng);
        if arrivals == n {
            return Ok(process.cost());
        }
        last = next;
    }
}

/// `N_n(x)` in the discrete model: build the quadtree of n uniform points.
pub fn discrete_cost<R: Rng + ?Sized>(n: usize, x: f64, rng: &mut R) -> Result<u64> {
    check_unit("x", x)?;
    let mut tree = QuadTree::new();
    for p in PointRecord::uniform_sequence(n, rng) {
        tree.insert(p.x, p.y)?;
    }
    Ok(tree.partial_match_cost(x)? as u64)
}

/// `N_t(x)` by building the full tree of the Poisson points up to `t`.
pub fn full_tree_cost_at_time<R: Rng + ?Sized>(x: f64, t: f64, rng: &mut R) -> Result<u64> {
    check_unit("x", x)?;
    let arrivals = ArrivalProcess::until(t, rng);
    let mut tree = QuadTree::new();
    for _ in &arrivals.taus {
        tree.insert(open01(rng), open01(rng))?;
    }
    Ok(tree.partial_match_cost(x)? as u64)
}

#[derive(Debug, Clone, Serialize)]
pub struct DepoissonizationReport {
    pub n: usize,
    pub x: f64,
    pub eps: f64,
    pub replicas: usize,
    /// Empirical `P(tau_n outside [n(1 - eps), n(1 + eps)])`.
    pub p_outside: f64,
    /// Empirical `E[|N_{tau_n} - N_n|^2 ; tau_n outside the band]`.
    pub mean_sq_diff_outside: f64,
    /// Mean of `|N_{tau_n} - N_n|^2` over the outside replicas only.
    pub conditional_sq_diff: Option<f64>,
    pub max_cost_at_tau_n: u64,
    /// Replicas where `N_{tau_n}(x) > n`; always zero.
    pub bound_violations: usize,
}

/// Compares the cost at the n-th arrival with the cost at time n on the same
/// Poisson sample, replica by replica.
pub fn depoissonization_report(
    n: usize,
    x: f64,
    eps: f64,
    replicas: usize,
    seed: u64,
) -> Result<DepoissonizationReport> {
    check_unit("x", x)?;
    if n == 0 {
        return Err(Error::Config("depoissonization needs n >= 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfDomain {
            name: "eps",
            value: eps,
            domain: "(0, 1)",
        });
    }
    let rows: Vec<(bool, f64, u64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, crate::rng::tag_hash("depoissonization"), r);
            let mut tree = QuadTree::new();
            let (mut t, mut count) = (0.0, 0usize);
            let (mut at_tau_n, mut at_time_n) = (None, None);
            while at_tau_n.is_none() || at_time_n.is_none() {
                let next = t + exponential(&mut rng, 1.0);
                if at_time_n.is_none() && next > n as f64 {
                    at_time_n = Some(tree.partial_match_cost(x).expect("x checked"));
                }
                t = next;
                tree.insert(open01(&mut rng), open01(&mut rng))
                    .expect("a.s. distinct interior points");
                count += 1;
                if count == n {
                    at_tau_n = Some((t, tree.partial_match_cost(x).expect("x checked")));
                }
            }
            let (tau_n, cost_tau) = at_tau_n.unwrap();
            let outside = tau_n < n as f64 * (1.0 - eps) || tau_n > n as f64 * (1.0 + eps);
            let diff = cost_tau as f64 - at_time_n.unwrap() as f64;
            (outside, diff * diff, cost_tau as u64)
        })
        .collect();
    let outside: Vec<f64> = rows.iter().filter(|r| r.0).map(|r| r.1).collect();
    let reps = replicas as f64;
    Ok(DepoissonizationReport {
        n,
        x,
        eps,
        replicas,
        p_outside: outside.len() as f64 / reps,
        mean_sq_diff_outside: outside.iter().sum::<f64>() / reps,
        conditional_sq_diff: (!outside.is_empty())
            .then(|| outside.iter().sum::<f64>() / outside.len() as f64),
        max_cost_at_tau_n: rows.iter().map(|r| r.2).max().unwrap_or(0),
        bound_violations: rows.iter().filter(|r| r.2 > n as u64).count(),
    })
}

/// Whether campaign sizes are continuous times or discrete point counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    Time,
    Arrivals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostRecord {
    pub replica: u64,
    pub t_or_n: f64,
    pub x: f64,
    pub cost: u64,
}

/// One cost sample per (replica, size, x). Replica `r` draws from its own
/// stream; records come back ordered by (x, size, replica).
pub fn cost_campaign(
    mode: CostMode,
    sizes: &[f64],
    xs: &[f64],
    replicas: u64,
    seed: u64,
    tag: u64,
) -> Result<Vec<CostRecord>> {
    for &x in xs {
        check_unit("x", x)?;
    }
    let mut out = Vec::with_capacity(sizes.len() * xs.len() * replicas as usize);
    for (xi, &x) in xs.iter().enumerate() {
        for (si, &size) in sizes.iter().enumerate() {
            let stream_tag = tag ^ ((xi as u64) << 40) ^ ((si as u64) << 20);
            let costs: Vec<Result<u64>> = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replica_rng(seed, stream_tag, r);
                    match mode {
                        CostMode::Time => Ok(cost_at_time(x, size, &mut rng)),
                        CostMode::Arrivals => cost_at_arrival(size.round() as u64, x, &mut rng),
                    }
                })
                .collect();
            for (replica, cost) in costs.into_iter().enumerate() {
                out.push(CostRecord {
                    replica: replica as u64,
                    t_or_n: size,
                    x,
                    cost: cost?,
                });
            }
        }
    }
    Ok(out)
}

/// CSV with header `replica,t_or_n,x,cost`.
pub fn write_cost_csv<W: Write>(records: &[CostRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub mean: f64,
    pub variance: f64,
    pub ci_half_width: f64,
    pub seed: u64,
    pub replicas: u64,
}

impl CampaignSummary {
    pub fn new(costs: &[f64], seed: u64) -> Self {
        let s = Summary::from_samples(costs);
        CampaignSummary {
            mean: s.mean,
            variance: s.variance,
            ci_half_width: s.ci_half_width,
            seed,
            replicas: costs.len() as u64,
        }
    }
}
