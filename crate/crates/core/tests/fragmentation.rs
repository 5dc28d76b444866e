mod common;

use common::{draws, mean, triangular_cdf, SEED};
use pmq::fragmentation::{
    dislocation_uniform, dislocation_x0, l2_limit_check, left_edge_samples, martingale_path,
    p_star, simulate_fragment_count, write_fragment_csv, Dislocation, FragmentSet, MalthusianSpec,
};
use pmq::rng::open01;
use pmq::stats::{ks_one_sample, ks_two_sample, ols_slope, Summary};

#[test]
fn uniform_dislocation_children() {
    let samples = draws("disl-uniform", 50_000, |rng| {
        let s = dislocation_uniform(rng);
        // one child picked by a fair coin
        let child = if open01(rng) < 0.5 { s.s1 } else { s.s2 };
        (s.s1 + s.s2, child)
    });
    let children: Vec<f64> = samples.iter().map(|s| s.1).collect();
    assert!(ks_one_sample(&children, triangular_cdf).p_value > 0.01);
    // total equals the shared width, density 2w
    let totals: Vec<f64> = samples.iter().map(|s| s.0).collect();
    assert!(totals.iter().all(|&w| w <= 1.0));
    assert!(ks_one_sample(&totals, |w: f64| w.clamp(0.0, 1.0).powi(2)).p_value > 0.01);
}

#[test]
fn left_edge_dislocation_total_is_the_left_width() {
    let totals: Vec<f64> = draws("disl-x0", 50_000, |rng| {
        let s = dislocation_x0(rng);
        s.s1 + s.s2
    });
    assert!(Summary::from_samples(&totals).contains(0.5));
}

#[test]
fn psi_monte_carlo_matches_closed_forms() {
    let betas = [0.3, p_star(), 0.5, 1.0, 1.7];
    for d in [Dislocation::Uniform, Dislocation::LeftEdge] {
        let samples = draws("psi", 100_000, |rng| d.sample(rng));
        for b in betas {
            let terms: Vec<f64> = samples
                .iter()
                .map(|s| 1.0 - s.s1.powf(b) - s.s2.powf(b))
                .collect();
            let s = Summary::from_samples(&terms);
            // ten checks on shared samples: Bonferroni-adjusted 95% band
            assert!(
                (s.mean - d.psi(b)).abs() <= 2.81 * s.std_err(),
                "{d:?}, beta = {b}: {} vs {}",
                s.mean,
                d.psi(b)
            );
        }
    }
}

#[test]
fn custom_psi_root() {
    // 1 - 2 E[U^b] = (b - 1) / (b + 1) for two independent uniform children
    let spec = MalthusianSpec::new(|b| (b - 1.0) / (b + 1.0));
    let root = pmq::fragmentation::malthusian_root(&spec, 0.1, 2.0).unwrap();
    assert!((root - 1.0).abs() < 1e-14);
}

#[test]
fn counts_start_at_one_and_grow() {
    let mut rng = pmq::rng::replica_rng(SEED, 0, 0);
    assert_eq!(
        simulate_fragment_count(0.0, Dislocation::Uniform, &mut rng),
        1
    );
    let early: Vec<f64> = draws("count-2", 5000, |rng| {
        simulate_fragment_count(2.0, Dislocation::Uniform, rng) as f64
    });
    let late: Vec<f64> = draws("count-20", 5000, |rng| {
        simulate_fragment_count(20.0, Dislocation::Uniform, rng) as f64
    });
    assert!(mean(&late) > mean(&early));
}

#[test]
fn subtrees_are_rescaled_copies() {
    let t = 10.0;
    let pairs = draws("self-similar", 10_000, |rng| {
        let mut set = FragmentSet::with_lineage(Dislocation::Uniform, rng);
        let tau = set.next_split_time();
        let first = set.step(rng).unwrap();
        set.advance_to(t, rng);
        let sub = set
            .lineages()
            .iter()
            .filter(|(_, ratios)| ratios[0] == first.s1)
            .count();
        let rescaled = if tau < t { first.s1 * (t - tau) } else { 0.0 };
        let fresh = simulate_fragment_count(rescaled, Dislocation::Uniform, rng);
        (tau < t, sub as f64, fresh as f64)
    });
    let (sub, fresh): (Vec<f64>, Vec<f64>) =
        pairs.iter().filter(|p| p.0).map(|p| (p.1, p.2)).unzip();
    assert!(sub.len() > 9_000);
    let ks = ks_two_sample(&sub, &fresh);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn martingale_increments_are_orthogonal() {
    let samples = left_edge_samples(&[5.0, 20.0], 20_000, SEED);
    let (now, later) = (&samples.martingales[0], &samples.martingales[1]);
    let increments: Vec<f64> = now.iter().zip(later).map(|(a, b)| b - a).collect();
    let (slope, half) = ols_slope(now, &increments);
    assert!(slope.abs() <= half, "slope {slope} +- {half}");
    assert!(Summary::from_samples(&increments).contains(0.0));
}

#[test]
fn martingale_path_starts_at_one() {
    let paths = draws("mart-path", 200, |rng| martingale_path(30.0, rng).unwrap());
    for p in &paths {
        assert_eq!(p.value_at(0.0), 1.0);
        if let Some(&t1) = p.times.first() {
            assert_eq!(p.value_at(0.5 * t1), 1.0);
        }
    }
    assert!(martingale_path(0.0, &mut pmq::rng::replica_rng(0, 0, 0)).is_err());
}

#[test]
fn martingale_limit_fixed_point() {
    let t = 1000.0;
    let p = p_star();
    let direct = left_edge_samples(&[t], 4000, SEED).martingales.remove(0);
    let left = left_edge_samples(&[t], 4000, SEED + 1)
        .martingales
        .remove(0);
    let right = left_edge_samples(&[t], 4000, SEED + 2)
        .martingales
        .remove(0);
    let weights = draws("fixed-point", 4000, dislocation_x0);
    let composed: Vec<f64> = weights
        .iter()
        .zip(left.iter().zip(&right))
        .map(|(w, (a, b))| w.s1.powf(p) * a + w.s2.powf(p) * b)
        .collect();
    let ks = ks_two_sample(&direct, &composed);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn martingale_second_moment_settles() {
    let samples = left_edge_samples(&[10.0, 100.0, 1000.0], 4000, SEED);
    let second: Vec<f64> = samples
        .martingales
        .iter()
        .map(|m| mean(&m.iter().map(|v| v * v).collect::<Vec<_>>()))
        .collect();
    assert!(
        second.iter().all(|s| s.is_finite() && *s < 3.0),
        "{second:?}"
    );
    assert!(
        (second[2] - second[1]).abs() < 0.1 * second[1],
        "{second:?}"
    );
}

#[test]
fn l2_gap_decreases() {
    let rows = l2_limit_check(&[10.0, 100.0, 1000.0], 2000, SEED).unwrap();
    assert!(
        rows.windows(2).all(|w| w[1].mean_sq_gap < w[0].mean_sq_gap),
        "{rows:?}"
    );
    assert!(rows[2].correlation > rows[0].correlation);
}

#[test]
fn frozen_mass_is_reported() {
    let samples = left_edge_samples(&[50.0], 200, SEED);
    assert!(samples.frozen_mass[0]
        .iter()
        .all(|&m| (0.0..1e-20).contains(&m)));
    let mut buf = Vec::new();
    write_fragment_csv(&samples, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("replica,t,count,martingale_value,frozen_mass\n"));
    assert_eq!(text.lines().count(), 201);
}
