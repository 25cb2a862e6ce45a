mod common;

use common::{best_sparse_residual, dist, l1, l2, project_intersection_kkt, project_l1_bisect};
use proptest::prelude::*;
use rand::Rng;
use sparse_al::vector::{
    angle, hard_threshold, hinge_loss, normalize, project_intersection, project_l1, project_l2, Ball, DykstraOptions,
};
use sparse_al::world::Label;
use sparse_al::{RngState, WeightVector};

fn wv(v: &[f64]) -> WeightVector {
    WeightVector::new(v.to_vec()).unwrap()
}

fn vec_in(d: std::ops::RangeInclusive<usize>, mag: f64) -> impl Strategy<Value = Vec<f64>> {
    d.prop_flat_map(move |d| prop::collection::vec(-mag..mag, d))
}

fn nonzero_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, d).prop_filter("nonzero", |v| l2(v) > 1e-6)
}

/// Integer-valued entries make magnitude ties common.
fn tie_heavy(d: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    d.prop_flat_map(|d| prop::collection::vec((-3i32..=3).prop_map(f64::from), d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn threshold_is_best_sparse_approximation(
        (v, s) in prop_oneof![vec_in(1..=8, 50.0), tie_heavy(1..=8)]
            .prop_flat_map(|v| { let d = v.len(); (Just(v), 1..=d) })
    ) {
        let ht = hard_threshold(&wv(&v), s).unwrap();
        prop_assert!(ht.norm_l0() <= s);
        let residual: f64 = v.iter().zip(ht.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert!(residual <= best_sparse_residual(&v, s) * (1.0 + 1e-12));
        for (a, b) in v.iter().zip(ht.as_slice()) {
            prop_assert!(*b == 0.0 || a == b);
        }
    }

    #[test]
    fn threshold_breaks_ties_toward_lower_index(v in tie_heavy(2..=8)) {
        let ht = hard_threshold(&wv(&v), 1).unwrap();
        let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if m > 0.0 {
            let first = v.iter().position(|x| x.abs() == m).unwrap();
            prop_assert_eq!(ht.support(), vec![first]);
        }
    }

    #[test]
    fn normalization_within_twice_the_distance(
        (w, v) in (1..=12usize).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d)))
    ) {
        let v = normalize(&wv(&v)).unwrap();
        let w = wv(&w);
        prop_assert!(normalize(&w).unwrap().distance_l2(&v) <= 2.0 * w.distance_l2(&v) + 1e-12);
    }

    #[test]
    fn angle_at_most_pi_times_distance(
        (w, v) in (1..=12usize).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d)))
    ) {
        let w = normalize(&wv(&w)).unwrap();
        let v = normalize(&wv(&v)).unwrap();
        let theta = angle(&w, &v).unwrap();
        prop_assert!(theta <= std::f64::consts::PI * w.distance_l2(&v) + 1e-12);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&theta));
    }

    #[test]
    fn angle_is_scale_invariant(
        (w, v) in (1..=12usize).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d))),
        a in -6.0..6.0f64,
        b in -6.0..6.0f64,
    ) {
        let (w, v) = (wv(&w), wv(&v));
        let base = angle(&w, &v).unwrap();
        let scaled = angle(&w.scale(10f64.powf(a)), &v.scale(10f64.powf(b))).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12);
    }

    #[test]
    fn angle_matches_arccos_away_from_the_poles(
        (w, v) in (2..=12usize).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d)))
    ) {
        let (w, v) = (wv(&w), wv(&v));
        let cos = w.dot(&v) / (w.norm_l2() * v.norm_l2());
        prop_assume!(cos.abs() < 0.99);
        prop_assert!((angle(&w, &v).unwrap() - cos.acos()).abs() < 1e-12);
    }

    #[test]
    fn hinge_dominates_zero_one(
        (w, x) in (1..=12usize).prop_flat_map(|d| (vec_in(d..=d, 5.0), vec_in(d..=d, 5.0))),
        positive in any::<bool>(),
        tau in 0.001..10.0f64,
    ) {
        let y = if positive { Label::Positive } else { Label::Negative };
        let loss = hinge_loss(&wv(&w), &wv(&x), y, tau);
        let margin = y.sign() * w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!(loss >= 0.0);
        if margin <= 0.0 {
            prop_assert!(loss >= 1.0);
        }
        prop_assert!((loss - (1.0 - margin / tau).max(0.0)).abs() <= 1e-9 * (1.0 + loss));
    }

    #[test]
    fn projections_are_feasible_and_idempotent(
        (v, c) in (1..=10usize).prop_flat_map(|d| (vec_in(d..=d, 20.0), vec_in(d..=d, 2.0))),
        r2 in 0.001..5.0f64,
        ratio in 0.3..4.0f64,
    ) {
        let r1 = r2 * ratio;
        let (v, c) = (wv(&v), wv(&c));
        let b2 = Ball::l2(c.clone(), r2).unwrap();
        let b1 = Ball::l1(c.clone(), r1).unwrap();
        let p2 = project_l2(&v, &b2).unwrap();
        let p1 = project_l1(&v, &b1).unwrap();
        // Far-away inputs may hit the iteration cap; the output is feasible regardless.
        let pb = project_intersection(&v, &b2, &b1, DykstraOptions::default()).unwrap();
        prop_assert!(b2.slack(&p2) <= 1e-9);
        prop_assert!(b1.slack(&p1) <= 1e-9);
        prop_assert!(b2.slack(&pb.point) <= 1e-9 && b1.slack(&pb.point) <= 1e-9);
        prop_assert!(project_l2(&p2, &b2).unwrap().distance_l2(&p2) <= 1e-12);
        prop_assert!(project_l1(&p1, &b1).unwrap().distance_l2(&p1) <= 1e-12);
        let again = project_intersection(&pb.point, &b2, &b1, DykstraOptions::default()).unwrap();
        prop_assert!(again.point.distance_l2(&pb.point) <= 1e-9);
    }

    #[test]
    fn l1_projection_matches_bisection(
        (v, c) in (1..=10usize).prop_flat_map(|d| (vec_in(d..=d, 20.0), vec_in(d..=d, 2.0))),
        r in 0.001..5.0f64,
    ) {
        let p = project_l1(&wv(&v), &Ball::l1(wv(&c), r).unwrap()).unwrap();
        let oracle = project_l1_bisect(&v, &c, r);
        prop_assert!(dist(p.as_slice(), &oracle) <= 1e-9 * (1.0 + l2(&v)));
    }

    #[test]
    fn intersection_matches_optimality_conditions(
        (dir, c) in (1..=10usize).prop_flat_map(|d| (nonzero_vec(d), vec_in(d..=d, 2.0))),
        offset in 0.0..3.0f64,
        r2 in 0.01..2.0f64,
        ratio in 0.3..4.0f64,
    ) {
        // Inputs within a few radii of the center, as produced by the solver's
        // subgradient steps.
        let r1 = r2 * ratio;
        let n = l2(&dir);
        let v: Vec<f64> = c.iter().zip(&dir).map(|(a, b)| a + b / n * offset * r2).collect();
        let p = project_intersection(
            &wv(&v),
            &Ball::l2(wv(&c), r2).unwrap(),
            &Ball::l1(wv(&c), r1).unwrap(),
            DykstraOptions::default(),
        )
        .unwrap();
        prop_assert!(p.converged);
        let oracle = project_intersection_kkt(&v, &c, r2, r1);
        prop_assert!(dist(p.point.as_slice(), &oracle) <= 1e-6);
    }
}

#[test]
fn far_inputs_report_convergence_honestly() {
    let v = wv(&[-17.08580963868889, 9.34056018818865, 19.116173162237704]);
    let c = WeightVector::zeros(3);
    let (b2, b1) = (Ball::l2(c.clone(), 0.01).unwrap(), Ball::l1(c, 0.0158).unwrap());
    let p = project_intersection(&v, &b2, &b1, DykstraOptions::default()).unwrap();
    assert!(!p.converged);
    assert_eq!(p.iterations, 10_000);
    assert!(b2.slack(&p.point) <= 1e-12 && b1.slack(&p.point) <= 1e-12);
    let oracle = project_intersection_kkt(v.as_slice(), &[0.0; 3], 0.01, 0.0158);
    assert!(dist(p.point.as_slice(), &oracle) < 0.01);
}

#[test]
fn l2_projection_beats_a_dense_grid() {
    let mut rng = RngState::new(5, 0);
    for _ in 0..20 {
        let v = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = rng.random_range(0.2..2.0);
        let p = project_l2(&wv(&v), &Ball::l2(wv(&c), r).unwrap()).unwrap();
        let lo = [c[0] - r, c[1] - r];
        let hi = [c[0] + r, c[1] + r];
        let grid = common::grid_min_distance(&v, &lo, &hi, 801, |z| dist(z, &c) <= r);
        let got = dist(p.as_slice(), &v);
        assert!(got <= grid + 1e-12);
        assert!(grid - got <= 2.0 * r * 2f64.sqrt() / 800.0);
    }
}

#[test]
fn l1_projection_no_sampled_feasible_point_is_closer() {
    let mut rng = RngState::new(6, 0);
    for _ in 0..5 {
        let d = 4;
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let c = vec![0.0; d];
        let r = rng.random_range(0.3..2.0);
        let p = project_l1(&wv(&v), &Ball::l1(wv(&c), r).unwrap()).unwrap();
        let got = dist(p.as_slice(), &v);
        for _ in 0..100_000 {
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
            if l1(&z) <= r {
                assert!(dist(&z, &v) >= got - 1e-12);
            }
        }
    }
}
