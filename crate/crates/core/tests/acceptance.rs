//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

mod common;

use std::time::{Duration, Instant};

use common::{draws, uniform_cdf, SEED};
use pmq::analytics::{
    apply_g, constants, kernel_mass, limit_curve, log_gamma, power_iteration, solve_mean_ode,
    GOperator, GridFunction, DEFAULT_NODES,
};
use pmq::chain::{coupling_campaign, drift_check, geometric_moment, run_coupled};
use pmq::experiment::{boundedness_scan, profile_correlation, run, ExperimentConfig, ExperimentId};
use pmq::fragmentation::{
    left_edge_samples, malthusian_root, simulate_fragment_count, Dislocation, MalthusianSpec,
};
use pmq::poisson::{cost_at_arrival, cost_at_time, discrete_cost};
use pmq::quadtree::{build_quadtree, PointRecord};
use pmq::rng::{open01, replica_rng};
use pmq::stats::{joint_half_width, ks_one_sample, ks_two_sample, pearson, Summary};

fn verdict(n: u32, name: &str, started: Instant, limit: Duration, ok: bool, detail: String) {
    let elapsed = started.elapsed();
    let pass = ok && elapsed <= limit;
    println!(
        "criterion {n:>2}: {} {name} ({detail}; {:.2}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_exponents() {
    let t = Instant::now();
    let beta =
        malthusian_root(&MalthusianSpec::closed_form(Dislocation::Uniform), 0.1, 1.0).unwrap();
    let p = malthusian_root(
        &MalthusianSpec::closed_form(Dislocation::LeftEdge),
        0.1,
        1.0,
    )
    .unwrap();
    let (eb, ep) = (
        (beta - (17f64.sqrt() - 3.0) / 2.0).abs(),
        (p - (2f64.sqrt() - 1.0)).abs(),
    );
    verdict(
        1,
        "Malthusian exponents",
        t,
        Duration::from_secs(1),
        eb <= 1e-12 && ep <= 1e-12,
        format!("|beta err| = {eb:.1e}, |p err| = {ep:.1e}"),
    );
}

#[test]
fn criterion_02_constants_identity() {
    let t = Instant::now();
    let b = (17f64.sqrt() - 3.0) / 2.0;
    let lg = |z: f64| log_gamma(z).unwrap();
    let k0 =
        (lg(2.0 * b + 2.0) + lg(b + 2.0) - 3.0 * lg(b + 1.0) - 2.0 * lg(b / 2.0 + 1.0)).exp() / 2.0;
    let c_u = (lg(2.0 * b + 2.0) - 3.0 * lg(b + 1.0)).exp() / 2.0;
    let p0_l1 = (2.0 * lg(b / 2.0 + 1.0) - lg(b + 2.0)).exp();
    let rel = (k0 * p0_l1 - c_u).abs() / c_u;
    let c = constants();
    let same = (c.k0 - k0).abs() <= 1e-15 * k0 && (c.c_u - c_u).abs() <= 1e-15 * c_u;
    verdict(
        2,
        "K0 * |p0|_1 = c_U",
        t,
        Duration::from_secs(1),
        rel <= 1e-12 && same,
        format!("relative error {rel:.1e}, K0 = {k0:.12}, c_U = {c_u:.12}"),
    );
}

#[test]
fn criterion_03_kernel_normalization() {
    let t = Instant::now();
    let worst = (1..=32)
        .map(|i| (kernel_mass(i as f64 / 33.0) - 1.0).abs())
        .fold(0.0, f64::max);
    verdict(
        3,
        "kernel columns integrate to 1",
        t,
        Duration::from_secs(5),
        worst <= 1e-8,
        format!("max error over 32 columns {worst:.1e}"),
    );
}

#[test]
fn criterion_04_fixed_point() {
    let t = Instant::now();
    let p0 = GridFunction::p0(DEFAULT_NODES);
    let fixed_err = apply_g(&p0).sup_distance(&p0);
    let op = GOperator::new(&p0);
    let one = GridFunction::from_fn(DEFAULT_NODES, |_, _| 1.0);
    let it = power_iteration(&op, &one, 200, 1e-13);
    let power_err = it.function.sup_distance(&p0.normalized());
    verdict(
        4,
        "p0 is the fixed point of G",
        t,
        Duration::from_secs(30),
        fixed_err <= 1e-6 && power_err <= 1e-4,
        format!(
            "|G p0 - p0| = {fixed_err:.1e}, power iteration error {power_err:.1e} after {} steps",
            it.iterations
        ),
    );
}

fn uniform_query_costs(t: f64, replicas: u64) -> Summary {
    let costs: Vec<f64> = draws(&format!("uniform-cost-{t}"), replicas, |rng| {
        let x = open01(rng);
        cost_at_time(x, t, rng) as f64
    });
    Summary::from_samples(&costs)
}

#[test]
fn criterion_05_cauchy_problem_vs_monte_carlo() {
    let t = Instant::now();
    let sol = solve_mean_ode(32.0, 1e-3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for time in [2.0, 8.0, 32.0] {
        let mc = uniform_query_costs(time, 10_000);
        let f = sol.value_at(time);
        ok &= mc.contains(f);
        parts.push(format!(
            "t={time}: f={f:.4} vs {:.4}±{:.4}",
            mc.mean, mc.ci_half_width
        ));
    }
    verdict(
        5,
        "ODE solution vs E[N_t(U)]",
        t,
        Duration::from_secs(120),
        ok,
        parts.join(", "),
    );
}

#[test]
fn criterion_06_uniform_limit() {
    let t = Instant::now();
    let sol = solve_mean_ode(1e4, 0.01).unwrap();
    let ratio = sol.scaled_at(1e4) / constants().c_u;
    verdict(
        6,
        "t^-beta f(t) -> c_U",
        t,
        Duration::from_secs(60),
        (ratio - 1.0).abs() <= 0.05,
        format!("ratio at t = 1e4: {ratio:.4}"),
    );
}

#[test]
fn criterion_07_fragmentation_equivalence() {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for time in [2.0, 8.0, 32.0] {
        let frag: Vec<f64> = draws(&format!("frag-count-{time}"), 10_000, |rng| {
            simulate_fragment_count(time, Dislocation::Uniform, rng) as f64 - 1.0
        });
        let frag = Summary::from_samples(&frag);
        let tree = uniform_query_costs(time, 10_000);
        let gap = (frag.mean - tree.mean).abs();
        let half = joint_half_width(&frag, &tree);
        ok &= gap <= half;
        parts.push(format!(
            "t={time}: {:.4} vs {:.4} (gap {gap:.4} <= {half:.4})",
            frag.mean, tree.mean
        ));
    }
    verdict(
        7,
        "fragment count - 1 vs N_t(U)",
        t,
        Duration::from_secs(180),
        ok,
        parts.join(", "),
    );
}

#[test]
fn criterion_08_left_edge() {
    let t = Instant::now();
    let c0 = constants().c_0;
    let times = [1.0, 10.0, 100.0, 1000.0];
    let samples = left_edge_samples(&times, 10_000, SEED);
    let mut ok = true;
    let mut parts = Vec::new();
    for (time, values) in times.iter().zip(&samples.martingales).take(3) {
        let m = Summary::from_samples(values);
        ok &= m.contains(1.0);
        parts.push(format!(
            "E[M_{time}] = {:.4}±{:.4}",
            m.mean, m.ci_half_width
        ));
    }
    let scale = 1000f64.powf(1.0 - std::f64::consts::SQRT_2);
    let scaled: Vec<f64> = samples.costs[3].iter().map(|n| n * scale).collect();
    let ratio = Summary::from_samples(&scaled).mean / c0;
    ok &= (ratio - 1.0).abs() <= 0.1;
    parts.push(format!(
        "t^(1-sqrt2) E[N_t(0)] / c0 = {ratio:.4} at t = 1e3"
    ));
    verdict(
        8,
        "left-edge martingale and cost",
        t,
        Duration::from_secs(180),
        ok,
        parts.join(", "),
    );
}

#[test]
fn criterion_09_coupling() {
    let t = Instant::now();
    let k = 20;
    let states = draws("acceptance-coupling", 10_500, |rng| {
        run_coupled(0.5, k, rng).unwrap()
    });
    let accepted: Vec<_> = states
        .iter()
        .filter(|s| s.coupling_time.is_some_and(|c| c <= k))
        .take(10_000)
        .collect();
    let xs: Vec<f64> = accepted.iter().map(|s| s.x).collect();
    let logs: Vec<f64> = accepted.iter().map(|s| s.log_mbar).collect();
    let ks = ks_one_sample(&xs, uniform_cdf);
    let corr = pearson(&xs, &logs);
    let short = geometric_moment(
        &coupling_campaign(0.5, 100, 20_000, SEED).unwrap(),
        1.15,
        100,
    );
    let long = geometric_moment(
        &coupling_campaign(0.5, 200, 20_000, SEED + 1).unwrap(),
        1.15,
        200,
    );
    let gap = (short.estimate.mean - long.estimate.mean).abs();
    let stable =
        long.estimate.mean.is_finite() && gap <= joint_half_width(&short.estimate, &long.estimate);
    verdict(
        9,
        "coupling of the spine chain",
        t,
        Duration::from_secs(120),
        accepted.len() == 10_000 && ks.p_value > 0.01 && corr.abs() < 0.05 && stable,
        format!(
            "KS p = {:.3}, corr = {corr:.4}, E[1.15^T] = {:.4}±{:.4} (k_max 100) vs {:.4}±{:.4} (k_max 200)",
            ks.p_value, short.estimate.mean, short.estimate.ci_half_width, long.estimate.mean, long.estimate.ci_half_width
        ),
    );
}

#[test]
fn criterion_10_drift() {
    let t = Instant::now();
    let worst = (1..=99)
        .map(|i| drift_check(i as f64 / 100.0).unwrap())
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .unwrap();
    verdict(
        10,
        "drift inequality",
        t,
        Duration::from_secs(30),
        worst.ratio <= 0.85 + 1e-6,
        format!("max ratio {:.6} at x = {}", worst.ratio, worst.x),
    );
}

#[test]
fn criterion_11_theorem_one_at_desk_scale() {
    let t = Instant::now();
    let beta = constants().beta_star;
    let target = limit_curve(0.5);
    let mut ratios = Vec::new();
    for n in [100u64, 1_000, 10_000, 100_000] {
        let costs: Vec<f64> = draws(&format!("theorem1-{n}"), 10_000, |rng| {
            cost_at_arrival(n, 0.5, rng).unwrap() as f64
        });
        let s = Summary::from_samples(&costs);
        let scale = (n as f64).powf(-beta) / target;
        ratios.push((s.mean * scale, s.ci_half_width * scale));
    }
    let monotone = ratios
        .windows(2)
        .all(|w| w[1].0 + w[1].1 + w[0].1 >= w[0].0);
    let last = ratios[3].0;
    let xs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let scan = boundedness_scan(&xs, &[1000.0], 10_000, SEED).unwrap();
    let r = profile_correlation(&scan, 1000.0);
    let shown: Vec<String> = ratios
        .iter()
        .map(|(m, h)| format!("{m:.4}±{h:.4}"))
        .collect();
    verdict(
        11,
        "Theorem 1 at finite n",
        t,
        Duration::from_secs(600),
        monotone && (0.85..=1.15).contains(&last) && r > 0.99,
        format!(
            "ratios n=1e2..1e5: [{}], profile r = {r:.5}",
            shown.join(", ")
        ),
    );
}

#[test]
fn criterion_12_structural_invariants() {
    let t = Instant::now();
    let mut rng = replica_rng(SEED, 12, 0);
    let counts_ok = (0..1000).all(|_| {
        let n = (open01(&mut rng) * 1001.0) as usize;
        let tree = build_quadtree(&PointRecord::uniform_sequence(n, &mut rng)).unwrap();
        tree.cover().rects.len() == 3 * n + 1
    });
    let fast: Vec<f64> = draws("acc-spine-64", 10_000, |rng| {
        cost_at_arrival(64, 0.5, rng).unwrap() as f64
    });
    let full: Vec<f64> = draws("acc-full-64", 10_000, |rng| {
        discrete_cost(64, 0.5, rng).unwrap() as f64
    });
    let ks = ks_two_sample(&fast, &full);

    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut identical = true;
    for id in ExperimentId::ALL {
        let (sizes, xs) = match id {
            ExperimentId::Coupling => (vec![20.0], vec![0.3]),
            ExperimentId::Drift => (vec![], vec![0.1, 0.5]),
            _ => (vec![16.0, 64.0], vec![0.3, 0.5]),
        };
        for dir in [&a, &b] {
            let config = ExperimentConfig {
                experiment: id,
                seed: SEED,
                replicas: 200,
                sizes: sizes.clone(),
                x_values: xs.clone(),
                out: dir.path().to_path_buf(),
            };
            run(&config).unwrap();
        }
        for name in [format!("{id}.csv"), format!("{id}_samples.csv")] {
            let (pa, pb) = (a.path().join(&name), b.path().join(&name));
            if pa.exists() || pb.exists() {
                identical &= std::fs::read(pa).ok() == std::fs::read(pb).ok();
            }
        }
    }
    verdict(
        12,
        "structural invariants",
        t,
        Duration::from_secs(120),
        counts_ok && ks.p_value > 0.01 && identical,
        format!(
            "3n+1 on 1000 trees: {counts_ok}, n=64 KS p = {:.3}, reruns identical: {identical}",
            ks.p_value
        ),
    );
}
