//! Seeded campaigns that compare simulated means with their limits and
//! write CSV tables plus a `summary.json`.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{beta_star, constants, limit_curve};
use crate::chain::{
    coupling_campaign, drift_check, geometric_moment, write_coupling_csv, write_drift_csv,
};
use crate::error::{check_unit, Error, Result};
use crate::fragmentation::{left_edge_samples, write_fragment_csv};
use crate::poisson::{cost_at_arrival, cost_at_time, discrete_cost};
use crate::rng::{open01, replica_rng, tag_hash};
use crate::stats::{pearson, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    /// `n^-beta E[N_n(x)]` against the limit curve.
    Theorem1,
    /// `t^-beta E[N_t(U)]` against `c_u`.
    Uniform,
    /// Left-edge cost and martingale.
    X0,
    /// Coupling time of the spine chain.
    Coupling,
    /// Drift ratio of the killed kernel.
    Drift,
    /// Supremum of `t^-beta E[N_t(x)]` over a grid.
    Boundedness,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Theorem1,
        ExperimentId::Uniform,
        ExperimentId::X0,
        ExperimentId::Coupling,
        ExperimentId::Drift,
        ExperimentId::Boundedness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Theorem1 => "theorem1",
            ExperimentId::Uniform => "uniform",
            ExperimentId::X0 => "x0",
            ExperimentId::Coupling => "coupling",
            ExperimentId::Drift => "drift",
            ExperimentId::Boundedness => "boundedness",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub replicas: u64,
    /// Point counts, times or horizons depending on the experiment.
    pub sizes: Vec<f64>,
    pub x_values: Vec<f64>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.sizes.is_empty() && self.experiment != ExperimentId::Drift {
            return Err(Error::Config("sizes must be nonempty".into()));
        }
        if let Some(s) = self.sizes.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::Config(format!(
                "size {s} is not a nonnegative number"
            )));
        }
        for &x in &self.x_values {
            check_unit("x", x)?;
        }
        if self.experiment == ExperimentId::Coupling || self.experiment == ExperimentId::Drift {
            if let Some(x) = self.x_values.iter().find(|&&x| x == 0.0 || x == 1.0) {
                return Err(Error::Config(format!(
                    "{} needs x in (0, 1), got {x}",
                    self.experiment
                )));
            }
        }
        Ok(())
    }
}

/// One estimate against its theoretical value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub quantity: String,
    pub size: f64,
    pub x: f64,
    pub mean: f64,
    pub variance: f64,
    pub ci_half_width: f64,
    pub theory: f64,
    pub ratio: f64,
}

impl EstimateRow {
    fn new(quantity: &str, size: f64, x: f64, s: &Summary, theory: f64) -> Self {
        EstimateRow {
            quantity: quantity.to_string(),
            size,
            x,
            mean: s.mean,
            variance: s.variance,
            ci_half_width: s.ci_half_width,
            theory,
            ratio: s.mean / theory,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub experiment: ExperimentId,
    pub rows: Vec<EstimateRow>,
}

impl EstimateReport {
    /// CSV with header `quantity,size,x,mean,variance,ci_half_width,theory,ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "quantity",
            "size",
            "x",
            "mean",
            "variance",
            "ci_half_width",
            "theory",
            "ratio",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.quantity.clone(),
                format!("{}", r.size),
                format!("{}", r.x),
                format!("{:.17e}", r.mean),
                format!("{:.17e}", r.variance),
                format!("{:.17e}", r.ci_half_width),
                format!("{:.17e}", r.theory),
                format!("{:.17e}", r.ratio),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    fn rows_of<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a EstimateRow> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }

    /// Threshold checks used by `--check`; returns one message per failure.
    pub fn check(&self) -> Vec<String> {
        let mut failures = Vec::new();
        let mut expect = |ok: bool, msg: String| {
            if !ok {
                failures.push(msg);
            }
        };
        let largest = |q: &str| {
            self.rows_of(q)
                .fold(None, |best: Option<&EstimateRow>, r| match best {
                    Some(b) if b.size >= r.size => Some(b),
                    _ => Some(r),
                })
                .cloned()
        };
        match self.experiment {
            ExperimentId::Theorem1 => {
                for r in self
                    .rows_of("scaled_cost")
                    .filter(|r| Some(r.size) == largest("scaled_cost").map(|l| l.size))
                {
                    expect(
                        (0.85..=1.15).contains(&r.ratio),
                        format!(
                            "theorem1: ratio {:.4} at n = {}, x = {} outside [0.85, 1.15]",
                            r.ratio, r.size, r.x
                        ),
                    );
                }
            }
            ExperimentId::Uniform => {
                if let Some(r) = largest("scaled_cost") {
                    expect(
                        (r.ratio - 1.0).abs() <= 0.1,
                        format!(
                            "uniform: ratio {:.4} at t = {} not within 10%",
                            r.ratio, r.size
                        ),
                    );
                }
            }
            ExperimentId::X0 => {
                if let Some(r) = largest("scaled_cost") {
                    expect(
                        (r.ratio - 1.0).abs() <= 0.1,
                        format!(
                            "x0: cost ratio {:.4} at t = {} not within 10%",
                            r.ratio, r.size
                        ),
                    );
                }
                for r in self.rows_of("martingale") {
                    expect(
                        (r.mean - 1.0).abs() <= r.ci_half_width,
                        format!(
                            "x0: martingale mean {:.5} at t = {} misses 1",
                            r.mean, r.size
                        ),
                    );
                }
            }
            ExperimentId::Coupling => {
                for r in self.rows_of("geometric_moment_1.15") {
                    expect(
                        r.mean.is_finite(),
                        format!("coupling: E[1.15^T] not finite at horizon {}", r.size),
                    );
                }
            }
            ExperimentId::Drift => {
                for r in self.rows_of("drift_ratio") {
                    expect(
                        r.mean <= 0.85 + 1e-6,
                        format!("drift: ratio {:.6} at x = {} exceeds 0.85", r.mean, r.x),
                    );
                }
            }
            ExperimentId::Boundedness => {
                let sup = self
                    .rows_of("scaled_cost")
                    .map(|r| r.mean)
                    .fold(0.0, f64::max);
                let cap = self
                    .rows_of("scaled_cost")
                    .map(|r| r.theory)
                    .fold(0.0, f64::max);
                expect(
                    sup.is_finite() && sup <= 2.0 * cap,
                    format!("boundedness: supremum {sup:.4} exceeds twice the limit-curve maximum {cap:.4}"),
                );
            }
        }
        failures
    }
}

/// Echo of the run written to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub config: &'a ExperimentConfig,
    pub version: &'static str,
    pub wall_clock_seconds: f64,
    pub report: &'a EstimateReport,
}

pub fn version() -> &'static str {
    option_env!("PMQ_GIT_DESCRIBE").unwrap_or(concat!("v", env!("CARGO_PKG_VERSION")))
}

fn stream_tag(id: ExperimentId, size: f64, x: f64) -> u64 {
    tag_hash(id.as_str()) ^ size.to_bits().rotate_left(13) ^ x.to_bits().rotate_left(37)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Output {
            path: path.to_path_buf(),
            source,
        })
}

/// Mean of `N_n(x)` over independent full quadtrees, with a 95% interval.
pub fn estimate_mean_cost(n: usize, x: f64, replicas: u64, seed: u64) -> Result<Summary> {
    check_unit("x", x)?;
    let costs: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, tag_hash("mean-cost") ^ (n as u64).rotate_left(29), r);
            discrete_cost(n, x, &mut rng).map(|c| c as f64)
        })
        .collect::<Result<_>>()?;
    Ok(Summary::from_samples(&costs))
}

/// Estimates of `t^-beta E[N_t(x)]` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessScan {
    pub rows: Vec<EstimateRow>,
    pub supremum: f64,
    /// Largest limit-curve value over the scanned `x`.
    pub limit_max: f64,
}

impl BoundednessScan {
    /// Row estimates at time `t`, ordered as the `x` grid.
    pub fn profile(&self, t: f64) -> Vec<&EstimateRow> {
        self.rows.iter().filter(|r| r.size == t).collect()
    }
}

pub fn boundedness_scan(
    xs: &[f64],
    ts: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<BoundednessScan> {
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::Config(
            "boundedness scan needs nonempty grids".into(),
        ));
    }
    let beta = beta_star();
    let mut rows = Vec::new();
    for &t in ts {
        for &x in xs {
            check_unit("x", x)?;
            let scale = t.powf(-beta);
            let costs: Vec<f64> = (0..replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replica_rng(seed, stream_tag(ExperimentId::Boundedness, t, x), r);
                    cost_at_time(x, t, &mut rng) as f64 * scale
                })
                .collect();
            rows.push(EstimateRow::new(
                "scaled_cost",
                t,
                x,
                &Summary::from_samples(&costs),
                limit_curve(x),
            ));
        }
    }
    let supremum = rows
        .iter()
        .map(|r| r.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let limit_max = xs.iter().map(|&x| limit_curve(x)).fold(0.0, f64::max);
    Ok(BoundednessScan {
        rows,
        supremum,
        limit_max,
    })
}

/// Pearson correlation of the scan profile at `t` with `(x(1-x))^(beta/2)`.
pub fn profile_correlation(scan: &BoundednessScan, t: f64) -> f64 {
    let profile = scan.profile(t);
    let means: Vec<f64> = profile.iter().map(|r| r.mean).collect();
    let shape: Vec<f64> = profile.iter().map(|r| limit_curve(r.x)).collect();
    pearson(&means, &shape)
}

fn scaled_cost_rows(
    config: &ExperimentConfig,
    uniform_query: bool,
    arrivals: bool,
) -> Vec<EstimateRow> {
    let c = constants();
    let xs: Vec<f64> = if uniform_query {
        vec![f64::NAN]
    } else {
        config.x_values.clone()
    };
    let mut rows = Vec::new();
    for &x in &xs {
        for &size in &config.sizes {
            let scale = size.powf(-c.beta_star);
            let samples: Vec<f64> = (0..config.replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng =
                        replica_rng(config.seed, stream_tag(config.experiment, size, x), r);
                    let query = if uniform_query { open01(&mut rng) } else { x };
                    let cost = if arrivals {
                        cost_at_arrival(size.round() as u64, query, &mut rng).expect("x validated")
                    } else {
                        cost_at_time(query, size, &mut rng)
                    };
                    cost as f64 * scale
                })
                .collect();
            let theory = if uniform_query { c.c_u } else { limit_curve(x) };
            rows.push(EstimateRow::new(
                "scaled_cost",
                size,
                x,
                &Summary::from_samples(&samples),
                theory,
            ));
        }
    }
    rows
}

/// Runs one experiment, writing `<id>.csv`, any raw-sample CSV and
/// `summary.json` into `config.out`.
pub fn run(config: &ExperimentConfig) -> Result<EstimateReport> {
    config.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&config.out).map_err(|source| Error::Output {
        path: config.out.clone(),
        source,
    })?;
    let raw_path = config
        .out
        .join(format!("{}_samples.csv", config.experiment));
    let rows = match config.experiment {
        ExperimentId::Theorem1 => scaled_cost_rows(config, false, true),
        ExperimentId::Uniform => scaled_cost_rows(config, true, false),
        ExperimentId::X0 => {
            let c = constants();
            let samples = left_edge_samples(&config.sizes, config.replicas, config.seed);
            write_fragment_csv(&samples, create(&raw_path)?)?;
            let mut rows = Vec::new();
            for (i, &t) in samples.times.iter().enumerate() {
                let scale = t.powf(1.0 - std::f64::consts::SQRT_2);
                let scaled: Vec<f64> = samples.costs[i].iter().map(|n| n * scale).collect();
                rows.push(EstimateRow::new(
                    "scaled_cost",
                    t,
                    0.0,
                    &Summary::from_samples(&scaled),
                    c.c_0,
                ));
                rows.push(EstimateRow::new(
                    "martingale",
                    t,
                    0.0,
                    &Summary::from_samples(&samples.martingales[i]),
                    1.0,
                ));
            }
            rows
        }
        ExperimentId::Coupling => {
            let mut rows = Vec::new();
            let mut records = Vec::new();
            for &x in &config.x_values {
                for &size in &config.sizes {
                    let k_max = size.round() as usize;
                    let recs = coupling_campaign(x, k_max, config.replicas, config.seed)?;
                    let g = geometric_moment(&recs, 1.15, k_max);
                    rows.push(EstimateRow::new(
                        "geometric_moment_1.15",
                        size,
                        x,
                        &g.estimate,
                        f64::NAN,
                    ));
                    let coupled: Vec<f64> = recs
                        .iter()
                        .map(|r| if r.censored { 0.0 } else { 1.0 })
                        .collect();
                    rows.push(EstimateRow::new(
                        "coupled_fraction",
                        size,
                        x,
                        &Summary::from_samples(&coupled),
                        1.0,
                    ));
                    records.extend(recs);
                }
            }
            write_coupling_csv(&records, create(&raw_path)?)?;
            rows
        }
        ExperimentId::Drift => {
            let reports = config
                .x_values
                .iter()
                .map(|&x| drift_check(x))
                .collect::<Result<Vec<_>>>()?;
            write_drift_csv(&reports, create(&raw_path)?)?;
            reports
                .iter()
                .map(|r| {
                    EstimateRow::new(
                        "drift_ratio",
                        0.0,
                        r.x,
                        &Summary::from_samples(&[r.ratio]),
                        0.85,
                    )
                })
                .collect()
        }
        ExperimentId::Boundedness => {
            boundedness_scan(
                &config.x_values,
                &config.sizes,
                config.replicas,
                config.seed,
            )?
            .rows
        }
    };
    let report = EstimateReport {
        experiment: config.experiment,
        rows,
    };
    let table = config.out.join(format!("{}.csv", config.experiment));
    report.write_csv(create(&table)?)?;
    let summary = RunSummary {
        config,
        version: version(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        report: &report,
    };
    let mut out = create(&config.out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    out.flush().map_err(|source| Error::Output {
        path: config.out.join("summary.json"),
        source,
    })?;
    Ok(report)
}
