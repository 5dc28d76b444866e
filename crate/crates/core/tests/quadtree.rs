mod common;

use common::{draws, triangular_cdf, uniform_cdf};
use pmq::numerics::integrate;
use pmq::quadtree::{
    build_quadtree, sample_spine_step, spine_trace, split, PointRecord, QuadCover, QuadTree, Rect,
};
use pmq::rng::{open01, replica_rng};
use pmq::stats::{chi_square, ks_one_sample, pearson};
use proptest::prelude::*;

#[test]
fn split_examples() {
    let q = split(&Rect::UNIT, 0.3, 0.7).unwrap();
    let mut areas: Vec<f64> = q.iter().map(Rect::area).collect();
    areas.sort_by(f64::total_cmp);
    for (a, e) in areas.iter().zip([0.09, 0.21, 0.21, 0.49]) {
        assert!((a - e).abs() < 1e-15);
    }
    let small = Rect::new(0.0, 0.5, 0.0, 0.5).unwrap();
    for r in split(&small, 0.25, 0.25).unwrap() {
        assert!((r.width() - 0.25).abs() < 1e-15 && (r.height() - 0.25).abs() < 1e-15);
    }
    assert!(split(&Rect::UNIT, 0.0, 0.5).is_err());
    assert!(split(&Rect::UNIT, 0.5, 1.0).is_err());
}

#[test]
fn cover_sizes_follow_three_n_plus_one() {
    let mut rng = replica_rng(1, 0, 0);
    assert_eq!(QuadTree::new().cover().rects.len(), 1);
    for n in [1, 8, 100] {
        let tree = build_quadtree(&PointRecord::uniform_sequence(n, &mut rng)).unwrap();
        let cover = tree.cover();
        assert_eq!(cover.rects.len(), 3 * n + 1);
        assert!((cover.total_area() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn empty_and_single_point_costs() {
    let tree = QuadTree::new();
    for x in [0.0, 0.4, 1.0] {
        assert_eq!(tree.partial_match_cost(x).unwrap(), 0);
    }
    let mut tree = QuadTree::new();
    tree.insert(0.6, 0.2).unwrap();
    for x in [0.0, 0.3, 0.59, 0.61, 1.0] {
        assert_eq!(tree.partial_match_cost(x).unwrap(), 1);
    }
    // on the split line all four quadrants meet the query
    assert_eq!(tree.partial_match_cost(0.6).unwrap(), 3);
}

#[test]
fn rejects_degenerate_points() {
    let mut tree = QuadTree::new();
    tree.insert(0.5, 0.5).unwrap();
    assert!(tree.insert(0.5, 0.25).is_err());
    assert!(tree.insert(0.25, 0.5).is_err());
    assert!(tree.insert(0.0, 0.3).is_err());
    let dup = [
        PointRecord {
            x: 0.2,
            y: 0.3,
            index: 1,
        },
        PointRecord {
            x: 0.2,
            y: 0.6,
            index: 2,
        },
    ];
    assert!(build_quadtree(&dup).is_err());
}

#[test]
fn insertion_order_matters() {
    let a = PointRecord {
        x: 0.3,
        y: 0.3,
        index: 1,
    };
    let b = PointRecord {
        x: 0.6,
        y: 0.7,
        index: 2,
    };
    let ab = build_quadtree(&[a, b]).unwrap().cover();
    let ba = build_quadtree(&[b, a]).unwrap().cover();
    assert_eq!(ab.rects.len(), ba.rects.len());
    let mut area_ab: Vec<f64> = ab.rects.iter().map(Rect::area).collect();
    let mut area_ba: Vec<f64> = ba.rects.iter().map(Rect::area).collect();
    area_ab.sort_by(f64::total_cmp);
    area_ba.sort_by(f64::total_cmp);
    assert_ne!(area_ab, area_ba);
}

#[test]
fn cover_text_round_trip() {
    let mut rng = replica_rng(2, 0, 0);
    let cover = build_quadtree(&PointRecord::uniform_sequence(20, &mut rng))
        .unwrap()
        .cover();
    let text = cover.to_text();
    assert!(text.starts_with("n=20\n"));
    let back = QuadCover::from_text(&text).unwrap();
    assert_eq!(back, cover);
    assert!(QuadCover::from_text("n=1\n0 1 0\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn descent_matches_scan(seed in any::<u64>(), n in 0usize..=64, x in 0.0f64..=1.0) {
        let mut rng = replica_rng(seed, 0, 0);
        let tree = build_quadtree(&PointRecord::uniform_sequence(n, &mut rng)).unwrap();
        let cover = tree.cover();
        prop_assert!(cover.validate().is_ok());
        prop_assert_eq!(tree.partial_match_cost(x).unwrap(), cover.partial_match_cost_scan(x));
    }
}

/// `P(M_1 in [m_lo, m_hi], X_1 in [y_lo, y_hi])` from the split geometry,
/// by one-dimensional quadrature over the split abscissa.
fn one_step_cell(x: f64, (m_lo, m_hi): (f64, f64), (y_lo, y_hi): (f64, f64)) -> f64 {
    let v_mass = |w: f64| (m_hi / w).min(1.0) - (m_lo / w).min(1.0);
    let mut p = 0.0;
    // x < u: X_1 = x / u in (x, 1), width u
    let (a, b) = (y_lo.max(x), y_hi.min(1.0));
    if a < b {
        p += integrate(v_mass, x / b, x / a, 1e-13);
    }
    // x > u: X_1 = (x - u) / (1 - u) in (0, x), width 1 - u
    let (a, b) = (y_lo.max(0.0), y_hi.min(x));
    if a < b {
        let u_of = |y: f64| (x - y) / (1.0 - y);
        p += integrate(|u| v_mass(1.0 - u), u_of(b), u_of(a), 1e-13);
    }
    p
}

#[test]
fn one_step_joint_law() {
    let x = 0.37;
    let n = 100_000u64;
    let samples = draws("spine-one-step", n, |rng| sample_spine_step(x, rng));
    let bins = 10;
    let mut observed = vec![0.0; bins * bins];
    for (y, m) in &samples {
        let i = ((m * bins as f64) as usize).min(bins - 1);
        let j = ((y * bins as f64) as usize).min(bins - 1);
        observed[i * bins + j] += 1.0;
    }
    let mut expected = Vec::with_capacity(bins * bins);
    for i in 0..bins {
        for j in 0..bins {
            let cell = |k: usize| (k as f64 / bins as f64, (k + 1) as f64 / bins as f64);
            expected.push(n as f64 * one_step_cell(x, cell(i), cell(j)));
        }
    }
    assert!((expected.iter().sum::<f64>() - n as f64).abs() < 1e-6 * n as f64);
    let test = chi_square(&observed, &expected);
    assert!(
        test.p_value > 0.01,
        "chi2 = {}, p = {}",
        test.statistic,
        test.p_value
    );
}

#[test]
fn uniform_query_step_law() {
    let samples = draws("spine-uniform", 50_000, |rng| {
        let x = open01(rng);
        sample_spine_step(x, rng)
    });
    let (ys, ms): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    assert!(ks_one_sample(&ys, uniform_cdf).p_value > 0.01);
    assert!(ks_one_sample(&ms, triangular_cdf).p_value > 0.01);
    assert!(pearson(&ys, &ms).abs() < 0.02);
}

#[test]
fn deep_trace_recursion_and_monotone_mass() {
    let mut rng = replica_rng(3, 0, 0);
    let trace = spine_trace(0.42, 120, &mut rng).unwrap();
    assert_eq!(trace.place(0), 0.42);
    assert_eq!(trace.mass(0), 1.0);
    for k in 1..=120 {
        assert!(trace.log_mass(k) < 0.0);
        assert!(trace.log_mbar(k) < trace.log_mbar(k - 1));
        let lhs = trace.log_f(k);
        let rhs = trace.log_mass(k) + (trace.f(k - 1) + trace.tau(k)).ln();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "k = {k}");
    }
    assert!(spine_trace(1.0, 3, &mut rng).is_err());
    assert_eq!(spine_trace(0.5, 0, &mut rng).unwrap().depth(), 0);
}
